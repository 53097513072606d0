///
/// \file dssmor.hpp
///
/// Umbrella header for the diagonal state-space model order reduction library.
///
#ifndef DSSMOR_DSSMOR_HPP
#define DSSMOR_DSSMOR_HPP

#include <dssmor/types.hpp>
#include <dssmor/model.hpp>
#include <dssmor/gramians.hpp>
#include <dssmor/gradients.hpp>
#include <dssmor/reducer.hpp>
#include <dssmor/baselines.hpp>
#include <dssmor/simulate.hpp>
#include <dssmor/io.hpp>
#include <dssmor/batch.hpp>
#include <dssmor/commands.hpp>

#endif /* DSSMOR_DSSMOR_HPP */
