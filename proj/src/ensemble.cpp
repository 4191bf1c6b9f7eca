#include "vibret/ensemble.hpp"

#include "vibret/binary_io.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace vibret {

namespace fs = std::filesystem;

EnsembleSetup prepare_ensemble(const RunConfig& cfg) {
    EnsembleSetup setup;
    const int n_per_spin = cfg.params.n_sites / 2;
    setup.geometry = optimize_geometry(cfg.params, n_per_spin, {}, cfg.clamp);
    setup.reference_orbitals = adiabatic_basis(build_h_e(cfg.params, setup.geometry.u_star)).orbitals;
    setup.state = parse_initial_state(cfg.initial_state, cfg.params.n_sites);
    if (cfg.sampling == Sampling::wigner) {
        setup.modes = hessian_and_modes(cfg.params, setup.geometry, n_per_spin);
        setup.sampler = std::make_unique<WignerSampler>(setup.modes, cfg.params, *cfg.seed);
    }
    return setup;
}

Trajectory initial_trajectory(const RunConfig& cfg, const EnsembleSetup& setup, std::uint64_t index) {
    NuclearPhase phase = setup.sampler ? setup.sampler->sample(index)
                                       : NuclearPhase::at_rest(setup.geometry.u_star, cfg.clamp);
    const AdiabaticBasis basis = adiabatic_basis(build_h_e(cfg.params, phase.u), &setup.reference_orbitals);
    const OrbitalSet orbitals{basis.orbitals.cast<cplx>()};
    return Trajectory(cfg.params, std::move(phase), build_initial_state(setup.state, orbitals));
}

namespace {

constexpr const char* kCheckpointMagic = "VBCKP001";

struct Checkpoint {
    std::set<std::uint64_t> completed;
    EnsembleAccumulator acc;
    // Serial runs may stop inside a trajectory.
    std::optional<std::uint64_t> partial_index;
    std::string partial_runner;  // serialized TrajectoryRunner
    std::vector<TrajectoryRecord> partial_records;
};

void write_checkpoint(const fs::path& file, const std::string& hash, const Checkpoint& cp) {
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
        io::put_magic(out, kCheckpointMagic);
        io::put_string(out, hash);
        io::put_vector(out, std::vector<std::uint64_t>(cp.completed.begin(), cp.completed.end()));
        cp.acc.write(out);
        io::put<std::uint8_t>(out, cp.partial_index.has_value());
        if (cp.partial_index) {
            io::put<std::uint64_t>(out, *cp.partial_index);
            io::put_string(out, cp.partial_runner);
            io::put<std::uint64_t>(out, cp.partial_records.size());
            for (const TrajectoryRecord& r : cp.partial_records) write_record(out, r);
        }
        if (!out) throw std::runtime_error("failed writing checkpoint " + tmp.string());
    }
    fs::rename(tmp, file);
}

Checkpoint read_checkpoint(const fs::path& file, const std::string& hash) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + file.string());
    io::expect_magic(in, kCheckpointMagic);
    const std::string stored = io::get_string(in);
    if (stored != hash)
        throw ConfigError("checkpoint " + file.string() + " was written for configuration " + stored +
                          ", current configuration is " + hash);
    Checkpoint cp;
    for (std::uint64_t i : io::get_vector<std::uint64_t>(in)) cp.completed.insert(i);
    cp.acc = EnsembleAccumulator::read(in);
    if (io::get<std::uint8_t>(in) != 0) {
        cp.partial_index = io::get<std::uint64_t>(in);
        cp.partial_runner = io::get_string(in);
        const auto n = io::get<std::uint64_t>(in);
        for (std::uint64_t k = 0; k < n; ++k) cp.partial_records.push_back(read_record(in));
    }
    return cp;
}

class Checkpointer {
public:
    Checkpointer(const RunConfig& cfg, const RunControl& control)
        : file_(fs::path(cfg.output_dir) / "checkpoint.bin"), hash_(cfg.hash()), control_(control) {}

    void save(const Checkpoint& cp) {
        write_checkpoint(file_, hash_, cp);
        ++written_;
        if (control_.interrupt_after_checkpoints >= 0 && written_ >= control_.interrupt_after_checkpoints)
            throw RunInterrupted("run interrupted after " + std::to_string(written_) + " checkpoints");
    }

    [[nodiscard]] const fs::path& file() const { return file_; }

private:
    fs::path file_;
    std::string hash_;
    const RunControl& control_;
    long long written_ = 0;
};

RecordOptions record_options(const RunConfig& cfg) { return {cfg.record_rdm2(), true}; }

void note_failure(const RunControl& control, std::uint64_t index, const std::exception& e) {
    if (!control.quiet) std::cerr << "trajectory " << index << " failed: " << e.what() << "\n";
}

void run_serial(const RunConfig& cfg, const EnsembleSetup& setup, Checkpoint& cp, Checkpointer& saver,
                const RunControl& control) {
    const RecordOptions options = record_options(cfg);
    const long long chunk =
        cfg.checkpoint_interval > 0.0
            ? std::max<long long>(1, std::llround(cfg.checkpoint_interval / cfg.record_interval))
            : -1;
    for (std::uint64_t i = 0; i < cfg.trajectories; ++i) {
        if (cp.completed.count(i) != 0) continue;
        std::vector<TrajectoryRecord> records;
        try {
            std::optional<TrajectoryRunner> runner;
            if (cp.partial_index && *cp.partial_index == i) {
                std::istringstream in(cp.partial_runner);
                runner.emplace(TrajectoryRunner::read(in, cfg.integrator, options));
                records = std::move(cp.partial_records);
            } else {
                runner.emplace(initial_trajectory(cfg, setup, i), cfg.integrator, options);
            }
            cp.partial_index.reset();
            cp.partial_records.clear();
            const auto push = [&](const TrajectoryRecord& r) { records.push_back(r); };
            while (!runner->advance(push, chunk)) {
                std::ostringstream buf;
                runner->write(buf, i);
                cp.partial_index = i;
                cp.partial_runner = buf.str();
                cp.partial_records = records;
                saver.save(cp);
                cp.partial_index.reset();
                cp.partial_runner.clear();
                cp.partial_records.clear();
            }
            cp.acc.add_trajectory(records);
        } catch (const MonitorFailure& e) {
            note_failure(control, i, e);
            cp.acc.record_failure(i);
        }
        cp.completed.insert(i);
        if (cfg.checkpoint_every > 0 && cp.completed.size() % cfg.checkpoint_every == 0) saver.save(cp);
    }
}

struct Slot {
    bool done = false;
    bool failed = false;
    std::vector<TrajectoryRecord> records;
};

void run_parallel(const RunConfig& cfg, const EnsembleSetup& setup, Checkpoint& cp, Checkpointer& saver,
                  const RunControl& control) {
    const RecordOptions options = record_options(cfg);
    std::vector<std::uint64_t> todo;
    for (std::uint64_t i = 0; i < cfg.trajectories; ++i)
        if (cp.completed.count(i) == 0) todo.push_back(i);

    std::mutex mu;
    std::condition_variable cv;
    std::map<std::uint64_t, Slot> slots;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= todo.size() || stop.load()) return;
            const std::uint64_t i = todo[k];
            Slot slot;
            try {
                slot.records = run_trajectory(initial_trajectory(cfg, setup, i), cfg.integrator, options);
            } catch (const MonitorFailure& e) {
                note_failure(control, i, e);
                slot.failed = true;
            }
            slot.done = true;
            {
                const std::lock_guard<std::mutex> lock(mu);
                slots[i] = std::move(slot);
            }
            cv.notify_one();
        }
    };

    const int n_threads = std::min<int>(cfg.workers, static_cast<int>(std::max<std::size_t>(todo.size(), 1)));
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);

    try {
        std::size_t merged = 0;
        while (merged < todo.size()) {
            std::vector<std::pair<std::uint64_t, Slot>> ready;
            {
                std::unique_lock<std::mutex> lock(mu);
                cv.wait(lock, [&] {
                    if (cfg.deterministic) return slots.count(todo[merged]) != 0;
                    return !slots.empty();
                });
                if (cfg.deterministic) {
                    // merge the contiguous prefix in index order
                    std::size_t k = merged;
                    while (k < todo.size()) {
                        auto it = slots.find(todo[k]);
                        if (it == slots.end()) break;
                        ready.emplace_back(it->first, std::move(it->second));
                        slots.erase(it);
                        ++k;
                    }
                } else {
                    for (auto& kv : slots) ready.emplace_back(kv.first, std::move(kv.second));
                    slots.clear();
                }
            }
            for (auto& [i, slot] : ready) {
                if (slot.failed) {
                    cp.acc.record_failure(i);
                } else {
                    cp.acc.add_trajectory(slot.records);
                }
                cp.completed.insert(i);
                ++merged;
                if (cfg.checkpoint_every > 0 && cp.completed.size() % cfg.checkpoint_every == 0) saver.save(cp);
            }
        }
    } catch (...) {
        stop = true;
        for (auto& th : pool) th.join();
        throw;
    }
    for (auto& th : pool) th.join();
}

std::string header(const RunConfig& cfg, const EnsembleAccumulator& acc, const std::string& what) {
    std::ostringstream o;
    o << "# vibret " << what << " schema=" << kCsvSchema << " version=" << kVersion << " config_hash=" << cfg.hash()
      << " n_sites=" << cfg.params.n_sites << " trajectories=" << acc.count() << " failed=" << acc.failed().size()
      << " ordering=" << (cfg.deterministic ? "index" : "completion") << "\n";
    return o.str();
}

void put_number(std::ostream& o, double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    o << buf;
}

}  // namespace

void write_outputs(const RunConfig& cfg, const EnsembleAccumulator& acc, const EnsembleSeries& series,
                   const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream o(dir / "populations.csv");
        o << header(cfg, acc, "populations");
        o << "time_fs";
        for (int k = 0; k < cfg.params.n_sites; ++k) o << ",n_" << k;
        o << ",energy_eV\n";
        for (std::size_t t = 0; t < series.time.size(); ++t) {
            put_number(o, series.time[t]);
            for (Eigen::Index k = 0; k < series.populations[t].size(); ++k) {
                o << ',';
                put_number(o, series.populations[t][k]);
            }
            o << ',';
            put_number(o, acc.mean_energy(t));
            o << "\n";
        }
    }
    if (cfg.triad) {
        std::ofstream o(dir / "states.csv");
        o << header(cfg, acc, "states");
        o << "time_fs";
        for (const std::string& l : *cfg.triad) o << ",p" << l;
        o << ",residual\n";
        for (std::size_t t = 0; t < series.states.size(); ++t) {
            put_number(o, series.time[t]);
            for (int k = 0; k < 3; ++k) {
                o << ',';
                put_number(o, series.states[t].p[k]);
            }
            o << ',';
            put_number(o, series.states[t].residual);
            o << "\n";
        }
    }
    {
        std::ofstream o(dir / "purity.csv");
        o << header(cfg, acc, "purity");
        o << "time_fs,P1,P2,M1_P1,M2_P1,M3_P1,M1_P2,M2_P2,M3_P2\n";
        for (std::size_t t = 0; t < series.time.size(); ++t) {
            put_number(o, series.time[t]);
            o << ',';
            put_number(o, series.p1[t]);
            o << ',';
            if (series.p2.empty()) {
                o << "nan";
            } else {
                put_number(o, series.p2[t]);
            }
            for (int m = 0; m < 3; ++m) {
                o << ',';
                if (series.models.empty()) {
                    o << "nan";
                } else {
                    put_number(o, series.models[t].p1[m]);
                }
            }
            for (int m = 0; m < 3; ++m) {
                o << ',';
                if (series.models.empty()) {
                    o << "nan";
                } else {
                    put_number(o, series.models[t].p2[m]);
                }
            }
            o << "\n";
        }
    }
    {
        std::ofstream o(dir / "run.cfg");
        o << "# written by vibret " << kVersion << ", config_hash=" << cfg.hash() << "\n" << cfg.dump();
    }
    {
        std::ofstream o(dir / "ensemble.bin", std::ios::binary | std::ios::trunc);
        io::put_string(o, cfg.hash());
        acc.write(o);
    }
}

EnsembleAccumulator read_ensemble(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    (void)io::get_string(in);
    return EnsembleAccumulator::read(in);
}

EnsembleResult run_ensemble(RunConfig cfg, const RunControl& control) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    const EnsembleSetup setup = prepare_ensemble(cfg);
    Checkpointer saver(cfg, control);

    Checkpoint cp;
    if (cfg.resume && fs::exists(saver.file())) cp = read_checkpoint(saver.file(), cfg.hash());

    if (cfg.workers == 1) {
        run_serial(cfg, setup, cp, saver, control);
    } else {
        run_parallel(cfg, setup, cp, saver, control);
    }
    saver.save(cp);

    std::optional<Triad> triad;
    if (cfg.triad) triad = Triad::from_labels(*cfg.triad, cfg.params.n_sites);

    EnsembleResult result;
    result.accumulator = std::move(cp.acc);
    result.series = ensemble_reduce(result.accumulator, cfg.params, triad);
    write_outputs(cfg, result.accumulator, result.series, cfg.output_dir);
    const std::size_t failed = result.accumulator.failed().size();
    if (failed == cfg.trajectories) {
        result.exit_code = kExitMonitor;
    } else if (failed > 0) {
        result.exit_code = kExitPartial;
    }
    return result;
}

}  // namespace vibret
