#pragma once

// Ensemble runner: Wigner-sampled trajectories, ordered reduction, worker
// pool, checkpoint/resume and the CSV outputs.

#include "vibret/ground_state.hpp"
#include "vibret/observables.hpp"
#include "vibret/run_config.hpp"

#include <filesystem>
#include <memory>

namespace vibret {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,
    kExitMonitor = 2,       // every trajectory failed its monitors
    kExitPartial = 3,       // some trajectories failed
};

/// Quantities shared by every trajectory of a run.
struct EnsembleSetup {
    OptimizedGeometry geometry;
    NormalModes modes;
    std::unique_ptr<WignerSampler> sampler;  // null for equilibrium starts
    Eigen::MatrixXd reference_orbitals;      // adiabatic orbitals at u*
    InitialStateSpec state;
};

[[nodiscard]] EnsembleSetup prepare_ensemble(const RunConfig& cfg);

/// Trajectory `index` of the run. Orbital phases are aligned to the
/// equilibrium orbitals so every member starts from the same superposition.
[[nodiscard]] Trajectory initial_trajectory(const RunConfig& cfg, const EnsembleSetup& setup, std::uint64_t index);

/// Raised by the test hook to emulate an interrupted run.
class RunInterrupted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunControl {
    long long interrupt_after_checkpoints = -1;  // testing hook
    bool quiet = true;
};

struct EnsembleResult {
    EnsembleAccumulator accumulator;
    EnsembleSeries series;
    int exit_code = kExitOk;
};

/// Runs (or resumes) the ensemble described by cfg. Writes a checkpoint
/// and the outputs into cfg.output_dir.
[[nodiscard]] EnsembleResult run_ensemble(RunConfig cfg, const RunControl& control = {});

/// populations.csv, states.csv (with a triad), purity.csv, ensemble.bin
void write_outputs(const RunConfig& cfg, const EnsembleAccumulator& acc, const EnsembleSeries& series,
                   const std::filesystem::path& dir);

/// Reads ensemble.bin back.
[[nodiscard]] EnsembleAccumulator read_ensemble(const std::filesystem::path& file);

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kCsvSchema = 1;

}  // namespace vibret
