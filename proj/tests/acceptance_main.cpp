// Acceptance gate. Each criterion prints one [PASS]/[FAIL] line with its
// wall time; the binary exits nonzero if any criterion fails or overruns
// its budget. Tolerances are pinned here on purpose: loosening one is a
// behavior change, not a cleanup.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mirrorsym/analysis.hpp"
#include "mirrorsym/data.hpp"
#include "mirrorsym/dcs.hpp"
#include "mirrorsym/experiment.hpp"
#include "mirrorsym/finite_diff.hpp"
#include "mirrorsym/linalg.hpp"
#include "mirrorsym/matrix.hpp"
#include "mirrorsym/mirror.hpp"
#include "mirrorsym/models.hpp"
#include "mirrorsym/optimize.hpp"
#include "mirrorsym/param.hpp"
#include "mirrorsym/rng.hpp"

using namespace mirrorsym;

namespace {

std::string g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

ParamVector random_theta(std::size_t dim, RngStream& rng, double scale = 1.0) {
    ParamVector v(dim);
    for (double& x : v) x = scale * rng.gaussian();
    return v;
}

std::vector<Sample> draw_samples(const PerSampleLoss& model, std::size_t n, RngStream& rng) {
    std::vector<Sample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(model.random_sample(rng));
    return out;
}

Dataset as_dataset(std::vector<Sample> samples, const std::string& tag) {
    Dataset ds;
    ds.samples = std::move(samples);
    ds.generator_tag = tag;
    return ds;
}

// Every model that registers mirrors, at sizes small enough for exhaustive
// per-pair checks.
std::vector<ModelPtr> model_zoo() {
    std::vector<ModelPtr> zoo;
    zoo.push_back(hadamard_regression(6));
    zoo.push_back(matrix_factorization(4));
    zoo.push_back(two_layer_tanh(6));
    zoo.push_back(permutation_mlp(4, 2));
    zoo.push_back(footnote_quadratic());
    return zoo;
}

// Skips "# " echo lines, validates the header, splits data rows on commas.
std::vector<std::vector<std::string>> csv_rows(const std::string& csv, const std::string& header,
                                               std::string& err) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(csv);
    std::string line;
    bool seen_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line.rfind("# ", 0) == 0) continue;
        if (!seen_header) {
            if (line != header) {
                err = "unexpected header: " + line;
                return {};
            }
            seen_header = true;
            continue;
        }
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        rows.push_back(std::move(fields));
    }
    if (!seen_header) err = "header row missing";
    return rows;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double rank = 0.5 * double(i + j) + 1.0;  // ties get the average rank
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = rank;
        i = j + 1;
    }
    return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = double(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / double(v.size());
}

struct Gate {
    bool all_ok = true;
    int passed = 0;
    int total = 0;

    void run(int idx, const std::string& label, double budget_s,
             const std::function<bool(std::string&)>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string why;
        bool ok = false;
        try {
            ok = body(why);
        } catch (const std::exception& e) {
            why = std::string("exception: ") + e.what();
            ok = false;
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool within = secs <= budget_s;
        const bool pass = ok && within;
        std::printf("[%s] criterion %2d: %s (%.2fs, budget %.0fs)\n", pass ? "PASS" : "FAIL", idx,
                    label.c_str(), secs, budget_s);
        if (!pass) {
            if (!within) std::printf("        over budget\n");
            if (!why.empty()) std::printf("        %s\n", why.c_str());
        }
        std::fflush(stdout);
        ++total;
        if (pass) ++passed;
        all_ok = all_ok && pass;
    }
};

}  // namespace

int main() {
    Gate gate;

    // Cached first runs of the experiment commands, reused by the
    // reproducibility criterion.
    ExperimentConfig cfg_sparsity, cfg_rank_g, cfg_rank_m, cfg_continual;
    std::string csv_sparsity, csv_rank_g, csv_rank_m, csv_continual;

    // 1. At the origin of the two-layer tanh model the Hessian of the
    //    per-sample loss splits into per-unit 2x2 blocks [[0, -xy], [-xy, 0]].
    gate.run(1, "per-unit hessian blocks at the tanh origin", 1.0, [&](std::string& why) {
        const std::size_t units = 10;
        const double entry_tol = 1e-4;
        const double vec_tol = 1e-3;
        auto model = two_layer_tanh(units);
        const Sample s{{1.0}, {2.0}};
        const auto f = [&](const ParamVector& th) { return model->loss(th, s); };
        const ParamVector origin(2 * units, 0.0);
        const Matrix H = finite_diff(f, origin).hessian;

        double off_block = 0.0;
        for (std::size_t p = 0; p < 2 * units; ++p)
            for (std::size_t q = 0; q < 2 * units; ++q)
                if (p != q && p % units != q % units)
                    off_block = std::max(off_block, std::abs(H(p, q)));
        if (off_block > entry_tol) {
            why = "cross-unit leak " + g6(off_block);
            return false;
        }

        const double inv = 1.0 / std::sqrt(2.0);
        for (std::size_t i = 0; i < units; ++i) {
            Matrix b(2, 2);
            b(0, 0) = H(i, i);
            b(0, 1) = H(i, units + i);
            b(1, 0) = H(units + i, i);
            b(1, 1) = H(units + i, units + i);
            if (std::abs(b(0, 1) + 2.0) > entry_tol) {
                why = "unit " + std::to_string(i) + " off-diagonal " + g6(b(0, 1));
                return false;
            }
            const auto eig = sym_eig(b);
            if (std::abs(eig.eigenvalues[0] + 2.0) > entry_tol ||
                std::abs(eig.eigenvalues[1] - 2.0) > entry_tol) {
                why = "unit " + std::to_string(i) + " eigenvalues " + g6(eig.eigenvalues[0]) +
                      ", " + g6(eig.eigenvalues[1]);
                return false;
            }
            // eigenvalue -2 pairs with (1,1)/sqrt2, +2 with (1,-1)/sqrt2,
            // up to an overall sign
            const double targets[2][2] = {{inv, inv}, {inv, -inv}};
            for (std::size_t c = 0; c < 2; ++c) {
                double dp = 0.0, dm = 0.0;
                for (std::size_t r = 0; r < 2; ++r) {
                    const double v = eig.eigenvectors(r, c);
                    dp += (v - targets[c][r]) * (v - targets[c][r]);
                    dm += (v + targets[c][r]) * (v + targets[c][r]);
                }
                if (std::sqrt(std::min(dp, dm)) > vec_tol) {
                    why = "unit " + std::to_string(i) + " eigenvector deviates";
                    return false;
                }
            }
        }
        return true;
    });

    // 2. At symmetric points the regularized per-sample gradient has no
    //    component in the mirror subspace, for every registered pair.
    gate.run(2, "regularized gradient tangent at symmetric points", 10.0, [&](std::string& why) {
        const double tol = 1e-10;
        RngStream rng(7, 0);
        double worst = -1.0;
        std::string worst_at;
        for (const auto& model : model_zoo()) {
            for (const auto& sym : model->mirrors()) {
                for (int rep = 0; rep < 100; ++rep) {
                    const ParamVector theta =
                        project_symmetric(sym, random_theta(model->dim(), rng));
                    const Sample s = model->random_sample(rng);
                    const ParamVector bare = model->grad(theta, s);
                    for (double gamma : {0.0, 0.1, 1.0}) {
                        ParamVector g = bare;
                        axpy(2.0 * gamma, theta, g);
                        const double r = norm2(sym.frame_coords(g));
                        if (r > worst) {
                            worst = r;
                            worst_at = model->name() + "/" + sym.label();
                        }
                    }
                }
            }
        }
        if (worst > tol) {
            why = "max mirror-component " + g6(worst) + " at " + worst_at;
            return false;
        }
        return true;
    });

    // 3. A symmetric start is a fixed set for noiseless SGD; injected
    //    gradient noise leaves it quickly. Checked pair by pair.
    gate.run(3, "symmetric start stays put under sgd; noise leaves", 30.0, [&](std::string& why) {
        const double stay_tol = 1e-8;
        const double leave_tol = 1e-4;
        RngStream data_rng(8, 0);
        RngStream init_rng(9, 0);
        std::uint64_t pair_id = 0;
        for (const auto& model : model_zoo()) {
            if (model->mirrors().empty()) continue;
            const auto src = SampleSource::fixed(
                as_dataset(draw_samples(*model, 32, data_rng), "acceptance_symmetric_set"));
            for (const auto& sym : model->mirrors()) {
                const ParamVector theta0 =
                    project_symmetric(sym, random_theta(model->dim(), init_rng, 0.5));
                TrainerConfig tc;
                tc.learning_rate = 0.05;
                tc.weight_decay = 0.01;
                tc.batch_size = 4;
                tc.steps = 1000;
                tc.optimizer = Optimizer::SGD;
                tc.record_every = 1;
                tc.seed = 11;
                tc.stream_id = pair_id++;
                tc.init = ExplicitInit{theta0};
                MetricSpec ms;
                ms.add("res", [&sym](const ParamVector& th) { return mirror_residual(sym, th); });
                const auto max_res = [](const Trajectory& tr) {
                    double m = 0.0;
                    for (const auto& row : tr.rows) m = std::max(m, row.values[0]);
                    return m;
                };
                const std::string tag = model->name() + "/" + sym.label();

                const Trajectory quiet = train(*model, src, tc, ms);
                if (quiet.diverged) {
                    why = tag + " diverged without noise";
                    return false;
                }
                const double stay = max_res(quiet);
                if (stay > stay_tol) {
                    why = tag + " drifted to " + g6(stay) + " without noise";
                    return false;
                }

                TrainerConfig noisy = tc;
                noisy.grad_noise_sd = 1e-3;
                noisy.stream_id = 100000 + pair_id;
                const Trajectory loud = train(*model, src, noisy, ms);
                if (loud.diverged) {
                    why = tag + " diverged under noise";
                    return false;
                }
                const double leave = max_res(loud);
                if (leave <= leave_tol) {
                    why = tag + " only reached " + g6(leave) + " under noise";
                    return false;
                }
            }
        }
        return true;
    });

    // 4. Above the crossover decay strength, dropping the mirror component
    //    strictly lowers the regularized loss.
    gate.run(4, "decay above the crossover favors the projected point", 30.0,
             [&](std::string& why) {
                 RngStream rng(13, 0);
                 // Models whose loss varies along their mirror directions: the
                 // crossover is generically nonzero and a 1% margin above it
                 // guarantees a strict win.
                 std::vector<ModelPtr> generic;
                 generic.push_back(hadamard_regression(6));
                 generic.push_back(matrix_factorization(4));
                 generic.push_back(two_layer_tanh(6));
                 generic.push_back(permutation_mlp(4, 2));
                 for (const auto& model : generic) {
                     const auto& mirrors = model->mirrors();
                     const auto samples = draw_samples(*model, 16, rng);
                     int wins = 0;
                     for (int rep = 0; rep < 100; ++rep) {
                         const auto& sym = mirrors[std::size_t(rep) % mirrors.size()];
                         ParamVector theta = random_theta(model->dim(), rng);
                         for (int tries = 0; mirror_residual(sym, theta) < 1e-8 && tries < 10;
                              ++tries)
                             theta = random_theta(model->dim(), rng);
                         const double g0 = gamma_threshold(*model, sym, theta, samples);
                         const double gamma = 1.01 * std::max(0.0, g0);
                         const ParamVector u = project_symmetric(sym, theta);
                         if (regularized_loss(*model, u, samples, gamma) <
                             regularized_loss(*model, theta, samples, gamma))
                             ++wins;
                     }
                     if (wins != 100) {
                         why = model->name() + ": " + std::to_string(wins) + "/100";
                         return false;
                     }
                 }

                 // footnote_quadratic depends on theta only through
                 // theta1 + theta2, which projecting out the swap direction
                 // preserves: its crossover sits exactly at zero, where the
                 // threshold theorem gives equality, not a strict win. Assert
                 // the degenerate crossover and test the strict claim at a
                 // fixed positive decay, which is above it.
                 {
                     auto model = footnote_quadratic();
                     const auto& sym = model->mirrors()[0];
                     const auto samples = draw_samples(*model, 16, rng);
                     int wins = 0;
                     double worst_g0 = 0.0;
                     for (int rep = 0; rep < 100; ++rep) {
                         ParamVector theta = random_theta(model->dim(), rng);
                         for (int tries = 0; mirror_residual(sym, theta) < 1e-8 && tries < 10;
                              ++tries)
                             theta = random_theta(model->dim(), rng);
                         worst_g0 = std::max(
                             worst_g0, std::abs(gamma_threshold(*model, sym, theta, samples)));
                         const ParamVector u = project_symmetric(sym, theta);
                         if (regularized_loss(*model, u, samples, 0.01) <
                             regularized_loss(*model, theta, samples, 0.01))
                             ++wins;
                     }
                     if (worst_g0 > 1e-8) {
                         why = "footnote_quadratic crossover " + g6(worst_g0) + ", expected 0";
                         return false;
                     }
                     if (wins != 100) {
                         why = "footnote_quadratic: " + std::to_string(wins) +
                               "/100 at fixed decay";
                         return false;
                     }
                 }
                 return true;
             });

    // 5. Stability of the linearized update: simulated threshold for the
    //    two-atom curvature, exact verdicts for constant curvature, and the
    //    second-order threshold within 25% in the small-step regime.
    gate.run(5, "linearized stability thresholds", 30.0, [&](std::string& why) {
        const DiscreteCurvature two_zero{{2.0, 0.0}, {1.0, 1.0}};
        std::uint64_t stream = 0;
        const auto grows = [&](double lam) {
            RngStream r(500, stream++);
            const auto path = simulate_linearized(two_zero, lam, 0.0, 1.0, 60000, r);
            if (path.escaped) return true;
            if (path.collapsed) return false;
            return std::log(path.abs_z.back()) > 0.0;
        };
        if (grows(0.5) || !grows(1.5)) {
            why = "bracket endpoints misclassified";
            return false;
        }
        double lo = 0.5, hi = 1.5;
        for (int it = 0; it < 26; ++it) {
            const double mid = 0.5 * (lo + hi);
            (grows(mid) ? hi : lo) = mid;
        }
        const double lam_hat = 0.5 * (lo + hi);
        if (std::abs(lam_hat - 1.0) > 0.05) {
            why = "simulated threshold " + g6(lam_hat) + ", exact 1";
            return false;
        }

        const DiscreteCurvature constant{{1.0}, {1.0}};
        RngStream unused(0, 0);
        const auto v01 = lyapunov_estimate(constant, 0.1, 0.0, 16, unused).verdict;
        const auto v19 = lyapunov_estimate(constant, 1.9, 0.0, 16, unused).verdict;
        const auto v21 = lyapunov_estimate(constant, 2.1, 0.0, 16, unused).verdict;
        if (v01 != StabilityVerdict::Collapse || v19 != StabilityVerdict::Collapse ||
            v21 != StabilityVerdict::Escape) {
            why = "constant-curvature verdicts wrong";
            return false;
        }

        // mixed atoms {-1, 0.8}: exact growth/decay crossover at 1/4
        const DiscreteCurvature mixed{{-1.0, 0.8}, {1.0, 1.0}};
        const auto exponent = [&](double lam) {
            RngStream r(0, 0);
            return lyapunov_estimate(mixed, lam, 0.0, 16, r).lambda_exponent;
        };
        if (!(exponent(0.05) > 0.0) || !(exponent(0.45) < 0.0)) {
            why = "mixed-curvature bracket endpoints misclassified";
            return false;
        }
        double a = 0.05, b = 0.45;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (a + b);
            (exponent(mid) > 0.0 ? a : b) = mid;
        }
        const double lam_star = 0.5 * (a + b);
        const double reach = std::max(std::abs(lam_star * -1.0), std::abs(lam_star * 0.8));
        if (reach > 0.5) {
            why = "crossover outside the small-step regime";
            return false;
        }
        const double second_order = critical_lr_second_order(mixed, 0.0);
        if (std::abs(second_order - lam_star) > 0.25 * lam_star) {
            why = "second-order threshold " + g6(second_order) + " vs exact " + g6(lam_star);
            return false;
        }
        return true;
    });

    // 6. Learning-rate sweep: the factored model sparsifies, the linear one
    //    never does, and sparsity rises with the rate across the grid.
    gate.run(6, "sparsity separates the parametrizations across rates", 300.0,
             [&](std::string& why) {
                 cfg_sparsity = default_config("sweep_sparsity");
                 cfg_sparsity.threads = 4;
                 csv_sparsity = run_sweep_sparsity(cfg_sparsity);
                 std::string err;
                 const auto rows = csv_rows(
                     csv_sparsity, "model,lambda,replicate,final_sparsity,final_loss", err);
                 if (!err.empty()) {
                     why = err;
                     return false;
                 }
                 double vanilla_max = 0.0;
                 std::map<double, std::vector<double>> had_sp;
                 std::map<double, std::vector<double>> had_loss;
                 for (const auto& r : rows) {
                     if (r.size() != 5) {
                         why = "malformed row";
                         return false;
                     }
                     const double lam = std::stod(r[1]);
                     if (r[0] == "vanilla") {
                         vanilla_max = std::max(vanilla_max, std::stod(r[3]));
                     } else if (r[0] == "hadamard") {
                         had_sp[lam].push_back(std::stod(r[3]));
                         had_loss[lam].push_back(std::stod(r[4]));
                     } else {
                         why = "unknown model " + r[0];
                         return false;
                     }
                 }
                 if (vanilla_max > 0.02) {
                     why = "linear model reached sparsity " + g6(vanilla_max);
                     return false;
                 }
                 if (had_sp.size() < 5) {
                     why = "grid has " + std::to_string(had_sp.size()) + " points, need 5";
                     return false;
                 }
                 double top_stable = -1.0, top_mean = 0.0;
                 std::vector<double> lams, means;
                 for (const auto& [lam, sps] : had_sp) {
                     if (sps.size() != cfg_sparsity.replicates) {
                         why = "missing replicates at rate " + g6(lam);
                         return false;
                     }
                     const double mean = mean_of(sps);
                     lams.push_back(lam);
                     means.push_back(mean);
                     bool stable = true;
                     for (double l : had_loss[lam]) stable = stable && std::isfinite(l) && l < 1e3;
                     if (stable && lam > top_stable) {
                         top_stable = lam;
                         top_mean = mean;
                     }
                 }
                 if (top_stable < 0.0) {
                     why = "no stable learning rate";
                     return false;
                 }
                 if (top_mean < 0.5) {
                     why = "top stable rate " + g6(top_stable) + " sparsity " + g6(top_mean);
                     return false;
                 }
                 const double rho = spearman(lams, means);
                 if (!(rho > 0.8)) {
                     why = "rank correlation " + g6(rho);
                     return false;
                 }
                 return true;
             });

    // 7. Decay sweep cuts the realized product rank monotonically; the
    //    residual variant keeps full rank at every teacher mix.
    gate.run(7, "decay cuts factorization rank; residual variant immune", 300.0,
             [&](std::string& why) {
                 cfg_rank_g = default_config("sweep_rank");
                 cfg_rank_g.threads = 4;
                 csv_rank_g = run_sweep_rank(cfg_rank_g);
                 std::string err;
                 const auto rows = csv_rows(
                     csv_rank_g, "variant,gamma,lambda,replicate,rank,final_loss", err);
                 if (!err.empty()) {
                     why = err;
                     return false;
                 }
                 std::map<double, std::vector<double>> ranks;
                 for (const auto& r : rows) {
                     if (r.size() != 6) {
                         why = "malformed row";
                         return false;
                     }
                     ranks[std::stod(r[1])].push_back(std::stod(r[4]));
                 }
                 if (ranks.size() != cfg_rank_g.gamma_grid.size()) {
                     why = "decay grid size mismatch";
                     return false;
                 }
                 const double full = double(cfg_rank_g.dim);
                 bool first = true;
                 double prev = 0.0;
                 for (const auto& [gam, v] : ranks) {
                     if (v.size() != cfg_rank_g.replicates) {
                         why = "missing replicates at decay " + g6(gam);
                         return false;
                     }
                     const double mean = mean_of(v);
                     if (first) {
                         if (gam != 0.0) {
                             why = "grid does not start at zero decay";
                             return false;
                         }
                         for (double rk : v)
                             if (rk != full) {
                                 why = "rank " + g6(rk) + " at zero decay";
                                 return false;
                             }
                     } else if (mean > prev + 1e-9) {
                         why = "rank increased to " + g6(mean) + " at decay " + g6(gam);
                         return false;
                     }
                     prev = mean;
                     first = false;
                 }
                 if (prev > 0.75 * full) {
                     why = "largest decay only cut rank to " + g6(prev);
                     return false;
                 }

                 cfg_rank_m = default_config("sweep_rank");
                 cfg_rank_m.rank_mode = "mu";
                 cfg_rank_m.optimizer = "sgd";
                 cfg_rank_m.learning_rate = 0.01;
                 cfg_rank_m.threads = 4;
                 csv_rank_m = run_sweep_rank(cfg_rank_m);
                 const auto mrows =
                     csv_rows(csv_rank_m, "variant,mu,lambda,replicate,rank,final_loss", err);
                 if (!err.empty()) {
                     why = err;
                     return false;
                 }
                 std::size_t residual_rows = 0;
                 for (const auto& r : mrows) {
                     if (r[0] != "residual") continue;
                     ++residual_rows;
                     if (std::stod(r[4]) != full) {
                         why = "residual variant rank " + r[4] + " at mix " + r[1];
                         return false;
                     }
                 }
                 if (residual_rows != cfg_rank_m.mu_grid.size() * cfg_rank_m.replicates) {
                     why = "missing residual rows";
                     return false;
                 }
                 return true;
             });

    // 8. Across sequential tasks, dead parameters accumulate only for the
    //    factored model; the linear, noise-injected, and random-bias
    //    variants hold the vanilla level.
    gate.run(8, "dead parameters accumulate only for the factored model", 300.0,
             [&](std::string& why) {
                 cfg_continual = default_config("continual");
                 csv_continual = run_continual(cfg_continual);
                 std::string err;
                 const auto rows = csv_rows(csv_continual, "variant,task,dead_neurons", err);
                 if (!err.empty()) {
                     why = err;
                     return false;
                 }
                 std::map<std::string, std::map<int, double>> dead;
                 for (const auto& r : rows) {
                     if (r.size() != 3) {
                         why = "malformed row";
                         return false;
                     }
                     dead[r[0]][std::stoi(r[1])] = std::stod(r[2]);
                 }
                 const int last = int(cfg_continual.tasks);
                 for (const char* name :
                      {"vanilla", "symmetric", "symmetric_noise", "symmetric_bias"}) {
                     if (dead[name].size() != cfg_continual.tasks) {
                         why = std::string("variant ") + name + " missing tasks";
                         return false;
                     }
                 }
                 const double sym1 = dead["symmetric"][1];
                 const double symT = dead["symmetric"][last];
                 const double van1 = dead["vanilla"][1];
                 const double vanT = dead["vanilla"][last];
                 const double noiT = dead["symmetric_noise"][last];
                 const double biaT = dead["symmetric_bias"][last];
                 if (!(symT > sym1)) {
                     why = "factored count " + g6(symT) + " did not grow from " + g6(sym1);
                     return false;
                 }
                 if (!(symT >= 5.0 * vanT)) {
                     why = "factored count " + g6(symT) + " below 5x vanilla " + g6(vanT);
                     return false;
                 }
                 if (!(vanT <= 2.0 * van1)) {
                     why = "vanilla grew from " + g6(van1) + " to " + g6(vanT);
                     return false;
                 }
                 if (!(noiT <= 2.0 * van1)) {
                     why = "noise variant at " + g6(noiT) + " vs vanilla start " + g6(van1);
                     return false;
                 }
                 if (!(biaT <= 2.0 * van1)) {
                     why = "bias variant at " + g6(biaT) + " vs vanilla start " + g6(van1);
                     return false;
                 }
                 return true;
             });

    // 9. Weight decay merges interchangeable mlp units into clusters;
    //    without it every unit stays distinct.
    gate.run(9, "decay merges mlp units; none merge without it", 300.0, [&](std::string& why) {
        const std::size_t width = 32;
        const std::size_t in_dim = 2;
        for (std::uint64_t seed : {std::uint64_t{0}, std::uint64_t{1}, std::uint64_t{2}}) {
            RngStream drng(seed, 77);
            const Dataset ds = gen_sparse_regression(in_dim, 200, 0.1, drng);
            for (double gamma : {1e-2, 0.0}) {
                auto model = permutation_mlp(width, in_dim);
                TrainerConfig tc;
                tc.learning_rate = 0.05;
                tc.weight_decay = gamma;
                tc.batch_size = 10;
                tc.steps = 20000;
                tc.optimizer = Optimizer::SGD;
                tc.seed = seed;
                const auto traj = train(*model, SampleSource::fixed(ds), tc);
                if (traj.diverged) {
                    why = "seed " + std::to_string(seed) + " diverged";
                    return false;
                }
                const auto m = structure_metrics(*model, traj.final_theta, ds);
                if (gamma > 0.0 && m.cluster_count >= width) {
                    why = "seed " + std::to_string(seed) + ": " +
                          std::to_string(m.cluster_count) + " clusters under decay";
                    return false;
                }
                if (gamma == 0.0 && m.cluster_count != width) {
                    why = "seed " + std::to_string(seed) + ": " +
                          std::to_string(m.cluster_count) + " clusters without decay";
                    return false;
                }
            }
        }
        return true;
    });

    // 10. The constraint reparametrization matches the unconstrained
    //     minimum when the penalty is off, sparsifies at least as hard as
    //     the direct factored model when it is on, and its certified flip
    //     stays stationary under symmetric-start SGD.
    gate.run(10, "constraint reparametrization: faithful, sparsifying, stationary", 60.0,
             [&](std::string& why) {
                 {
                     Dataset ds;
                     ds.generator_tag = "acceptance_faithfulness";
                     const double r2 = std::sqrt(2.0);
                     ds.samples = {{{r2, 0.0}, {r2}},
                                   {{-r2, 0.0}, {-r2}},
                                   {{0.0, r2}, {0.1 * r2}},
                                   {{0.0, -r2}, {-0.1 * r2}}};
                     auto base = linear_regression(2);
                     const ParamVector theta_star{1.0, 0.1};
                     const double best = mean_loss(*base, theta_star, ds.samples);

                     Matrix p(2, 2);
                     p(0, 0) = 1.0;
                     const DcsConfig dc{p, 0.0};
                     auto wrapped = dcs_wrap(linear_regression(2), dc);
                     TrainerConfig tc;
                     tc.learning_rate = 0.05;
                     tc.steps = 20000;
                     tc.optimizer = Optimizer::GD;
                     tc.seed = 4;
                     const auto traj = train(*wrapped, SampleSource::fixed(ds), tc);
                     if (traj.diverged) {
                         why = "faithfulness run diverged";
                         return false;
                     }
                     DcsParams dp;
                     dp.w.assign(traj.final_theta.begin(), traj.final_theta.begin() + 2);
                     dp.u.assign(traj.final_theta.begin() + 2, traj.final_theta.begin() + 4);
                     dp.v.assign(traj.final_theta.begin() + 4, traj.final_theta.end());
                     const double reached =
                         mean_loss(*base, dcs_extract(dp, dc).first, ds.samples);
                     if (reached - best > 1e-6) {
                         why = "wrapped minimum misses by " + g6(reached - best);
                         return false;
                     }
                 }
                 {
                     RngStream drng(10, 3);
                     const std::size_t d = 20;
                     const Dataset ds = gen_sparse_regression(d, 100, 0.1, drng);
                     Matrix eye(d, d);
                     for (std::size_t i = 0; i < d; ++i) eye(i, i) = 1.0;
                     const DcsConfig dc{eye, 0.05};
                     auto wrapped = dcs_wrap(linear_regression(d), dc);
                     TrainerConfig tc;
                     tc.learning_rate = 0.05;
                     tc.steps = 20000;
                     tc.optimizer = Optimizer::GD;
                     tc.seed = 5;
                     const auto wtraj = train(*wrapped, SampleSource::fixed(ds), tc);

                     auto direct = hadamard_regression(d);
                     TrainerConfig td = tc;
                     td.weight_decay = 0.05;
                     const auto dtraj = train(*direct, SampleSource::fixed(ds), td);
                     if (wtraj.diverged || dtraj.diverged) {
                         why = "sparsity run diverged";
                         return false;
                     }

                     DcsParams dp;
                     dp.w.assign(wtraj.final_theta.begin(), wtraj.final_theta.begin() + d);
                     dp.u.assign(wtraj.final_theta.begin() + d,
                                 wtraj.final_theta.begin() + 2 * d);
                     dp.v.assign(wtraj.final_theta.begin() + 2 * d, wtraj.final_theta.end());
                     const ParamVector realized = dcs_extract(dp, dc).first;
                     ParamVector prod(d);
                     for (std::size_t i = 0; i < d; ++i)
                         prod[i] = dtraj.final_theta[i] * dtraj.final_theta[d + i];

                     const auto sparsity_of = [](const ParamVector& v) {
                         std::size_t z = 0;
                         for (double x : v)
                             if (std::abs(x) < 1e-6) ++z;
                         return double(z) / double(v.size());
                     };
                     const double sp_wrapped = sparsity_of(realized);
                     const double sp_direct = sparsity_of(prod);
                     if (sp_wrapped < sp_direct) {
                         why = "wrapped sparsity " + g6(sp_wrapped) + " below direct " +
                               g6(sp_direct);
                         return false;
                     }
                     if (sp_wrapped < 0.5) {
                         why = "penalty failed to sparsify (" + g6(sp_wrapped) + ")";
                         return false;
                     }
                 }
                 {
                     Matrix p(4, 4);
                     p(1, 1) = 1.0;
                     p(2, 2) = 1.0;
                     const DcsConfig dc{p, 0.05};
                     auto wrapped = dcs_wrap(linear_regression(4), dc);
                     RngStream crng(14, 0);
                     const Dataset ds = gen_sparse_regression(4, 40, 0.1, crng);
                     const auto& sym = wrapped->mirrors().at(0);
                     const ParamVector theta0 =
                         project_symmetric(sym, random_theta(wrapped->dim(), crng, 0.5));
                     TrainerConfig tc;
                     tc.learning_rate = 0.05;
                     tc.weight_decay = 0.01;
                     tc.batch_size = 4;
                     tc.steps = 1000;
                     tc.optimizer = Optimizer::SGD;
                     tc.record_every = 1;
                     tc.seed = 15;
                     tc.init = ExplicitInit{theta0};
                     MetricSpec ms;
                     ms.add("res",
                            [&sym](const ParamVector& th) { return mirror_residual(sym, th); });
                     ms.add("constraint", [&dc](const ParamVector& th) {
                         DcsParams dp;
                         dp.w.assign(th.begin(), th.begin() + 4);
                         dp.u.assign(th.begin() + 4, th.begin() + 8);
                         dp.v.assign(th.begin() + 8, th.end());
                         return dcs_extract(dp, dc).second;
                     });
                     const auto traj = train(*wrapped, SampleSource::fixed(ds), tc, ms);
                     if (traj.diverged) {
                         why = "stationarity run diverged";
                         return false;
                     }
                     double worst = 0.0;
                     for (const auto& row : traj.rows)
                         worst = std::max(worst, std::max(row.values[0], row.values[1]));
                     if (worst > 1e-8) {
                         why = "flip residual reached " + g6(worst);
                         return false;
                     }
                 }
                 return true;
             });

    // 11. Along a mirror direction from a symmetric point, the averaged loss
    //     is an even, differentiable function of the squared distance; a
    //     direction that is not a loss symmetry fails the same check.
    gate.run(11, "loss linear in squared distance along mirror directions", 10.0,
             [&](std::string& why) {
                 const std::vector<double> grid{0.01, 0.02, 0.04, 0.08};

                 auto tanh_model = two_layer_tanh(2);
                 RngStream trng(21, 0);
                 const auto tsamples = draw_samples(*tanh_model, 10, trng);
                 const ParamVector origin(4, 0.0);
                 const auto& usym = tanh_model->mirrors()[0];
                 ParamVector n(4, 0.0);
                 n[0] = n[2] = 1.0 / std::sqrt(2.0);
                 const auto rep_tanh =
                     l1_equivalence_check(*tanh_model, usym, origin, n, tsamples, grid);
                 if (!rep_tanh.pass) {
                     why = "tanh mirror failed (odd part " + g6(rep_tanh.odd_part) + ", ratio " +
                           g6(rep_tanh.residual_ratio) + ")";
                     return false;
                 }

                 auto had = hadamard_regression(2);
                 RngStream hrng(22, 0);
                 const auto hsamples = draw_samples(*had, 10, hrng);
                 const auto& psym = had->mirrors()[1];
                 const ParamVector h0 = project_symmetric(psym, random_theta(4, hrng));
                 const ParamVector hn = psym.frame().col(0);
                 const auto rep_had = l1_equivalence_check(*had, psym, h0, hn, hsamples, grid);
                 if (!rep_had.pass) {
                     why = "hadamard pair mirror failed (odd part " + g6(rep_had.odd_part) +
                           ", ratio " + g6(rep_had.residual_ratio) + ")";
                     return false;
                 }

                 auto lin = linear_regression(2);
                 RngStream lrng(23, 0);
                 const auto lsamples = draw_samples(*lin, 10, lrng);
                 const double inv = 1.0 / std::sqrt(2.0);
                 Matrix col(2, 1);
                 col(0, 0) = inv;
                 col(1, 0) = -inv;
                 const MirrorSymmetry fake(col);
                 const ParamVector l0{0.7, 0.7};
                 const ParamVector ln{inv, -inv};
                 const std::vector<double> grid3{0.01, 0.02, 0.04};
                 const auto rep_fake = l1_equivalence_check(*lin, fake, l0, ln, lsamples, grid3);
                 if (rep_fake.pass) {
                     why = "fake mirror passed the control";
                     return false;
                 }
                 return true;
             });

    // 12. Re-running every experiment command with the same config
    //     reproduces the CSV byte for byte.
    gate.run(12, "identical configs reproduce byte-identical output", 600.0,
             [&](std::string& why) {
                 if (csv_sparsity.empty() || csv_rank_g.empty() || csv_rank_m.empty() ||
                     csv_continual.empty()) {
                     why = "earlier runs unavailable for comparison";
                     return false;
                 }
                 if (run_sweep_sparsity(cfg_sparsity) != csv_sparsity) {
                     why = "sparsity sweep not reproducible";
                     return false;
                 }
                 if (run_sweep_rank(cfg_rank_g) != csv_rank_g) {
                     why = "rank sweep (decay grid) not reproducible";
                     return false;
                 }
                 if (run_sweep_rank(cfg_rank_m) != csv_rank_m) {
                     why = "rank sweep (mix grid) not reproducible";
                     return false;
                 }
                 if (run_continual(cfg_continual) != csv_continual) {
                     why = "continual run not reproducible";
                     return false;
                 }
                 const auto lcfg = default_config("lyapunov");
                 if (run_lyapunov(lcfg) != run_lyapunov(lcfg)) {
                     why = "stability table not reproducible";
                     return false;
                 }
                 const auto vcfg = default_config("verify");
                 const auto v1 = run_verify(vcfg);
                 const auto v2 = run_verify(vcfg);
                 if (v1.csv != v2.csv) {
                     why = "verification report not reproducible";
                     return false;
                 }
                 if (!v1.ok) {
                     why = "verification gate reports failures";
                     return false;
                 }
                 return true;
             });

    std::printf("acceptance: %d/%d criteria passed\n", gate.passed, gate.total);
    return gate.all_ok ? 0 : 1;
}
