// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "latentem/colatent.hpp"
#include "latentem/contingency_table.hpp"
#include "latentem/divergence.hpp"
#include "latentem/errors.hpp"
#include "latentem/io.hpp"
#include "latentem/latent.hpp"
#include "latentem/network.hpp"
#include "latentem/serialize.hpp"

namespace latentem {

enum class Command { fit_latent, fit_colatent, fit_network, fit_network_co, inspect };
enum class InputFormat { csv, edgelist, text };

inline const char* to_string(Command command) {
    switch (command) {
        case Command::fit_latent: return "fit-latent";
        case Command::fit_colatent: return "fit-colatent";
        case Command::fit_network: return "fit-network";
        case Command::fit_network_co: return "fit-network-co";
        default: return "inspect";
    }
}

inline const char* to_string(InputFormat format) {
    switch (format) {
        case InputFormat::csv: return "csv";
        case InputFormat::edgelist: return "edgelist";
        default: return "text";
    }
}

struct RunConfig {
    Command command = Command::inspect;
    std::string input_path;
    InputFormat input_format = InputFormat::csv;
    int m = 2;
    int m2 = 0;  // 0 means "same as m"
    NetworkVariant variant = NetworkVariant::general;
    double lambda = 1.0;
    int restarts = 10;
    std::uint64_t seed = 0;
    int max_iter = 5000;
    double tol = 1e-10;
    std::string output_dir;

    int col_groups() const { return m2 > 0 ? m2 : m; }
    FitOptions fit_options() const { return FitOptions{max_iter, tol}; }
};

inline void validate(const RunConfig& config) {
    if (config.m < 1 || config.m2 < 0) throw ConfigError("group count must be >= 1");
    if (config.restarts < 1) throw ConfigError("restart count must be >= 1");
    if (config.lambda < 1.0) throw ConfigError("inflation factor must be >= 1");
    if (config.max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (!(config.tol >= 0.0)) throw ConfigError("tol must be >= 0");
    if (config.input_path.empty()) throw ConfigError("input path is required");
}

inline ContingencyTable load_table(const RunConfig& config) {
    try {
        switch (config.input_format) {
            case InputFormat::csv: return read_csv(config.input_path);
            case InputFormat::edgelist: return read_edge_list(config.input_path);
            default: return ingest_text(config.input_path);
        }
    } catch (const Error& e) {
        throw Error(config.input_path + ": " + e.what());
    }
}

namespace detail {

/// Restart concurrency cap: LATENTEM_THREADS when set, otherwise the
/// hardware concurrency.
inline int thread_cap() {
    if (const char* env = std::getenv("LATENTEM_THREADS")) {
        const int value = std::atoi(env);
        if (value >= 1) return value;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(r) for r in [0, count) on up to thread_cap() threads. Results are
/// indexed by restart, so the schedule cannot affect any output.
template <typename Fn>
void for_each_restart(int count, Fn&& fn) {
    const int workers = std::min(thread_cap(), count);
    if (workers <= 1) {
        for (int r = 0; r < count; ++r) fn(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (int r = next.fetch_add(1); r < count; r = next.fetch_add(1)) {
                try {
                    fn(r);
                } catch (...) {
                    failures[static_cast<std::size_t>(r)] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (const auto& failure : failures)
        if (failure) std::rethrow_exception(failure);
}

inline Json finite_or_null(double value) {
    return std::isfinite(value) ? Json(value) : Json(nullptr);
}

inline std::vector<std::string> effective_labels(const std::vector<std::string>& labels,
                                                 Eigen::Index count) {
    if (!labels.empty()) return labels;
    std::vector<std::string> fallback;
    fallback.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) fallback.push_back(std::to_string(i));
    return fallback;
}

inline Json assignment_json(const std::vector<std::string>& labels,
                            const std::vector<int>& groups) {
    Json out = Json::array();
    for (std::size_t i = 0; i < groups.size(); ++i)
        out.push_back(Json::array({labels[i], groups[i]}));
    return out;
}

inline Json spectral_json(const SpectralReport& report) {
    return Json{{"min_eigenvalue", report.min_eigenvalue},
                {"is_diffusive", report.is_diffusive},
                {"is_symmetric", report.is_symmetric},
                {"mh_deviation", report.mh_deviation}};
}

inline Json markov_json(const LatentMarkovSummary& summary) {
    return Json{{"W", rows_to_json(summary.W)},
                {"pi", vector_to_json(summary.pi)},
                {"mh_deviation", summary.mh_deviation},
                {"multiple_stationary", summary.multiple_stationary}};
}

inline Json trace_header(const RunConfig& config) {
    Json header{{"command", to_string(config.command)},
                {"input", config.input_path},
                {"format", to_string(config.input_format)},
                {"m", config.m}};
    if (config.command == Command::fit_colatent) header["m2"] = config.col_groups();
    if (config.command == Command::fit_network_co)
        header["variant"] = to_string(config.variant);
    if (config.command == Command::fit_network) header["lambda"] = config.lambda;
    header["restarts"] = config.restarts;
    header["seed"] = config.seed;
    header["max_iter"] = config.max_iter;
    header["tol"] = config.tol;
    return header;
}

}  // namespace detail

/// Outcome of a multi-restart fit: the best model (by final divergence, ties
/// to the lowest restart index), every restart's trace, and the report that
/// gets serialized.
struct FitReport {
    Json report;
    Json best_model;
    double best_kl = 0.0;
    int best_restart = 0;
    std::vector<double> per_restart_kl;
    std::vector<FitTrace> traces;
    std::vector<std::filesystem::path> written_files;
};

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& body,
                            std::vector<std::filesystem::path>& written) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << body;
    written.push_back(path);
}

inline void write_outputs(const RunConfig& config, FitReport& result) {
    if (config.output_dir.empty()) return;
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);
    write_text_file(dir / "model.json", result.best_model.dump(2) + "\n",
                    result.written_files);
    write_text_file(dir / "report.json", result.report.dump(2) + "\n",
                    result.written_files);
    for (std::size_t r = 0; r < result.traces.size(); ++r) {
        std::string body;
        const auto& kl = result.traces[r].kl_per_iteration;
        for (std::size_t t = 0; t < kl.size(); ++t)
            body += Json{{"iter", t}, {"kl", kl[t]}}.dump() + "\n";
        write_text_file(dir / ("trace_r" + std::to_string(r) + ".jsonl"), body,
                        result.written_files);
    }
}

template <typename Fit>
int pick_best(const std::vector<Fit>& fits, std::vector<double>& kl_out) {
    int best = 0;
    kl_out.clear();
    for (std::size_t r = 0; r < fits.size(); ++r) {
        kl_out.push_back(fits[r].trace.final_kl());
        if (kl_out[r] < kl_out[static_cast<std::size_t>(best)])
            best = static_cast<int>(r);
    }
    return best;
}

}  // namespace detail

inline FitReport run(const RunConfig& config) {
    validate(config);
    if (config.command == Command::inspect)
        throw ConfigError("inspect has a dedicated entry point");
    const ContingencyTable table = load_table(config);
    const FitOptions options = config.fit_options();
    const auto row_names = detail::effective_labels(table.row_labels(), table.rows());
    const auto col_names = detail::effective_labels(table.col_labels(), table.cols());

    FitReport result;
    Json report = detail::trace_header(config);
    Json diagnostics = Json::object();
    if (table.square())
        diagnostics["spectral"] = detail::spectral_json(spectral_report(table));

    switch (config.command) {
        case Command::fit_latent: {
            std::vector<LatentFit> fits(static_cast<std::size_t>(config.restarts));
            detail::for_each_restart(config.restarts, [&](int r) {
                fits[static_cast<std::size_t>(r)] =
                    fit(table,
                        random_hard_init(table, config.m,
                                         config.seed + static_cast<std::uint64_t>(r)),
                        options);
            });
            result.best_restart = detail::pick_best(fits, result.per_restart_kl);
            auto& best = fits[static_cast<std::size_t>(result.best_restart)];
            result.best_model = to_json(best.model);
            const Memberships posterior = memberships(best.model);
            report["hard_assignments"] =
                Json{{"rows", detail::assignment_json(
                                  row_names, detail::argmax_rows(posterior.rows))},
                     {"cols", detail::assignment_json(
                                  col_names, detail::argmax_rows(posterior.cols))}};
            for (auto& f : fits) result.traces.push_back(std::move(f.trace));
            break;
        }
        case Command::fit_colatent: {
            std::vector<CoLatentFit> fits(static_cast<std::size_t>(config.restarts));
            detail::for_each_restart(config.restarts, [&](int r) {
                fits[static_cast<std::size_t>(r)] =
                    fit(table,
                        random_hard_init(table, config.m, config.col_groups(),
                                         config.seed + static_cast<std::uint64_t>(r)),
                        options);
            });
            result.best_restart = detail::pick_best(fits, result.per_restart_kl);
            auto& best = fits[static_cast<std::size_t>(result.best_restart)];
            result.best_model = to_json(best.model);
            const Memberships posterior = memberships(best.model);
            report["hard_assignments"] =
                Json{{"rows", detail::assignment_json(
                                  row_names, detail::argmax_rows(posterior.rows))},
                     {"cols", detail::assignment_json(
                                  col_names, detail::argmax_rows(posterior.cols))}};
            if (config.m == config.col_groups()) {
                try {
                    diagnostics["markov"] =
                        detail::markov_json(latent_markov_summary(best.model));
                } catch (const Error& e) {
                    diagnostics["markov"] = Json{{"error", e.what()}};
                }
            }
            for (auto& f : fits) result.traces.push_back(std::move(f.trace));
            break;
        }
        case Command::fit_network: {
            if (!table.square())
                throw NotSquareError("network fitting needs a square table");
            const bool symmetrized_input = !table.symmetric();
            ContingencyTable working =
                symmetrized_input ? symmetrize(table) : table;
            const LambdaBounds bounds = lambda_bounds(working);
            if (config.lambda != 1.0)
                working = diagonal_inflation(working, config.lambda);
            std::vector<NetworkFit> fits;
            fits.reserve(static_cast<std::size_t>(config.restarts));
            for (int r = 0; r < config.restarts; ++r)
                fits.push_back(NetworkFit{NetworkLatentModel{}, FitTrace{}, working,
                                          symmetrized_input, config.lambda});
            detail::for_each_restart(config.restarts, [&](int r) {
                auto fit_r = fit_network_from(
                    working,
                    random_hard_init_network(working, config.m,
                                             config.seed + static_cast<std::uint64_t>(r)),
                    options);
                fits[static_cast<std::size_t>(r)].model = std::move(fit_r.model);
                fits[static_cast<std::size_t>(r)].trace = std::move(fit_r.trace);
            });
            result.best_restart = detail::pick_best(fits, result.per_restart_kl);
            auto& best = fits[static_cast<std::size_t>(result.best_restart)];
            result.best_model = to_json(best.model);
            report["hard_assignments"] = Json{
                {"vertices",
                 detail::assignment_json(row_names, detail::argmax_rows(best.model.Z))}};
            diagnostics["symmetrized_input"] = symmetrized_input;
            diagnostics["lambda_bounds"] =
                Json{{"nonneg", detail::finite_or_null(bounds.nonneg)},
                     {"psd", detail::finite_or_null(bounds.psd)}};
            if (config.lambda > bounds.psd)
                diagnostics["psd_bound_exceeded"] = true;
            for (auto& f : fits) result.traces.push_back(std::move(f.trace));
            break;
        }
        case Command::fit_network_co: {
            if (!table.square())
                throw NotSquareError("network fitting needs a square table");
            std::vector<NetworkCoFit> fits(static_cast<std::size_t>(config.restarts));
            detail::for_each_restart(config.restarts, [&](int r) {
                fits[static_cast<std::size_t>(r)] = fit_network_co(
                    table, config.m, config.variant,
                    config.seed + static_cast<std::uint64_t>(r), options);
            });
            result.best_restart = detail::pick_best(fits, result.per_restart_kl);
            auto& best = fits[static_cast<std::size_t>(result.best_restart)];
            result.best_model = to_json(best.model);
            report["hard_assignments"] = Json{
                {"vertices", detail::assignment_json(
                                 row_names, detail::argmax_rows(memberships(best.model)))}};
            diagnostics["markov"] = detail::markov_json(best.markov);
            if (config.variant == NetworkVariant::marginally_homogeneous) {
                diagnostics["mh_deviation_per_iteration"] = best.mh_deviation_per_iteration;
                try {
                    const MhRecovery recovery = mh_membership_recovery(
                        best.model.A, 0.5 * (table.row_margins() + table.col_margins()));
                    diagnostics["mh_recovery"] =
                        Json{{"rho", detail::vector_to_json(recovery.rho)},
                             {"Z", detail::columns_to_json(recovery.Z)},
                             {"residual", recovery.residual},
                             {"non_unique", recovery.non_unique}};
                } catch (const Error& e) {
                    diagnostics["mh_recovery"] = Json{{"error", e.what()}};
                }
            }
            for (auto& f : fits) result.traces.push_back(std::move(f.trace));
            break;
        }
        default: break;
    }

    result.best_kl = result.per_restart_kl[static_cast<std::size_t>(result.best_restart)];
    const FitTrace& best_trace = result.traces[static_cast<std::size_t>(result.best_restart)];
    report["best_restart"] = result.best_restart;
    report["best_kl"] = result.best_kl;
    report["per_restart_kl"] = result.per_restart_kl;
    report["converged"] = best_trace.converged;
    report["iterations"] = best_trace.iterations_run;
    report["stop_reason"] = to_string(best_trace.stop_reason);
    report["diagnostics"] = std::move(diagnostics);
    result.report = std::move(report);
    detail::write_outputs(config, result);
    return result;
}

/// Symmetry, spectrum, margin and rank diagnostics of an input table.
inline Json inspect(const ContingencyTable& table) {
    Json out{{"rows", table.rows()}, {"cols", table.cols()}, {"square", table.square()}};
    out["row_margins"] = detail::vector_to_json(table.row_margins());
    out["col_margins"] = detail::vector_to_json(table.col_margins());
    if (table.square()) {
        out["spectral"] = detail::spectral_json(spectral_report(table));
        const ContingencyTable sym = table.symmetric() ? table : symmetrize(table);
        const LambdaBounds bounds = lambda_bounds(sym);
        out["lambda_bounds"] = Json{{"nonneg", detail::finite_or_null(bounds.nonneg)},
                                    {"psd", detail::finite_or_null(bounds.psd)},
                                    {"of_symmetrized", !table.symmetric()}};
    }
    // Rank estimate: singular values above 1e-10 times the largest.
    const Eigen::JacobiSVD<Matrix> svd(table.values());
    const Vector& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-10 * sv(0)) ++rank;
    out["rank_estimate"] = rank;
    out["singular_values"] = detail::vector_to_json(sv);
    return out;
}

inline Json run_inspect(const RunConfig& config) {
    validate(config);
    const ContingencyTable table = load_table(config);
    Json out = inspect(table);
    if (!config.output_dir.empty()) {
        const std::filesystem::path dir(config.output_dir);
        std::filesystem::create_directories(dir);
        std::vector<std::filesystem::path> written;
        detail::write_text_file(dir / "inspect.json", out.dump(2) + "\n", written);
    }
    return out;
}

}  // namespace latentem
