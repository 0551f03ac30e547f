#pragma once

#include <cstdint>
#include <string>

#include "impact/facelift.hpp"
#include "impact/grid.hpp"
#include "impact/model.hpp"
#include "impact/pde.hpp"

namespace impact {

struct ModelConfig {
    std::string model = "bolozo";
    double sigma0 = 0.2;
    std::string sigma_mode = "constant";  // constant | proportional
    double f = 0.1;
    double epsilon = 1.0;

    ImpactModel build() const;
};

struct PayoffConfig {
    std::string kind = "call";  // call | put | call_spread | digital
    double strike = 100.0;
    double strike2 = 0.0;

    PayoffSpec build() const;
};

struct McConfig {
    std::size_t n_paths = 100000;
    std::size_t n_steps = 400;
};

struct RootConfig {
    ModelConfig model;
    SpaceTimeGrid grid;
    PayoffConfig payoff;
    SolverOptions solver;
    McConfig mc;
    double spot = 100.0;
    std::uint64_t seed = 42;
    std::string output_dir = ".";
};

/// Strict schema load: unknown keys rejected, violations reported with a
/// JSON-pointer path.
RootConfig parse_config(const std::string& path);
RootConfig parse_config_text(const std::string& text);

/// Full config (all defaults explicit) as pretty JSON.
std::string serialize_config(const RootConfig& cfg);
std::string default_config_text();

}  // namespace impact
