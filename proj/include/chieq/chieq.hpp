// Umbrella header for the Camassa-Holm IEQ solver core.
#ifndef CHIEQ_CHIEQ_HPP
#define CHIEQ_CHIEQ_HPP

#include <chieq/gauss.hpp>
#include <chieq/grid.hpp>
#include <chieq/integrate.hpp>
#include <chieq/model.hpp>
#include <chieq/spectral.hpp>
#include <chieq/stepper.hpp>

#endif  // CHIEQ_CHIEQ_HPP
