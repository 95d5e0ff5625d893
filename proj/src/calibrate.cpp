#include "cgqg/calibrate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "cgqg/common.hpp"
#include "cgqg/io.hpp"
#include "cgqg/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cgqg::calibrate {

void EsConfig::validate() const {
    if (population < 2 || population % 2 != 0)
        throw ConfigError("EsConfig: population must be even and >= 2");
    if (iters < 0) throw ConfigError("EsConfig: iters must be >= 0");
    if (!(sigma0 > 0) || !(lr0 >= 0)) throw ConfigError("EsConfig: bad step sizes");
}

void TrainConfig::validate() const {
    es.validate();
    if (curriculum.empty()) throw ConfigError("TrainConfig: empty curriculum");
    for (std::size_t i = 1; i < curriculum.size(); ++i)
        if (curriculum[i].w < curriculum[i - 1].w)
            throw ConfigError("TrainConfig: curriculum windows must be nondecreasing");
    if (S < 1 || batch < 1) throw ConfigError("TrainConfig: S and batch must be >= 1");
}

std::vector<int> sample_without_replacement(int n, int count, uint64_t key) {
    count = std::min(count, n);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    rng::CounterStream stream(key, rng::Stream::BatchSelect);
    for (int i = 0; i < count; ++i) {
        const int j = i + int(stream.uniform_index(uint64_t(i), uint64_t(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

EsResult es_optimize(const Objective& objective, std::vector<double> theta0,
                     const EsConfig& cfg, uint64_t seed,
                     const Objective* eval_objective) {
    cfg.validate();
    const int dim = int(theta0.size());
    const int pop = cfg.population;
    const int half = pop / 2;
    const Objective& eval = eval_objective ? *eval_objective : objective;

    EsResult res;
    res.final_theta = theta0;
    res.best_theta = theta0;
    res.best_loss = std::numeric_limits<double>::infinity();

    const uint64_t eval_key = mix64(seed, uint64_t(rng::Stream::EsEval));
    {
        const ObjectiveValue v0 = eval(theta0, eval_key);
        if (!std::isfinite(v0.loss))
            throw TrainingError("es_optimize: objective is non-finite at theta0");
        res.best_loss = v0.loss;
        res.ever_finite = v0.n_windows == 0 || v0.n_unstable < v0.n_windows;
    }

    std::vector<double>& theta = res.final_theta;
    std::vector<double> eps(std::size_t(half) * dim);
    std::vector<double> losses(pop);
    std::vector<int> unstable(pop), nwin(pop);
    std::vector<int> order(pop);

    for (int t = 0; t < cfg.iters; ++t) {
        const auto t_start = std::chrono::steady_clock::now();
        const double sigma = std::max(cfg.sigma_min, cfg.sigma0 * std::pow(cfg.sigma_decay, t));
        const double lr = std::max(cfg.lr_min, cfg.lr0 * std::pow(cfg.lr_decay, t));

        rng::CounterStream perturb(seed, rng::Stream::EsPerturb, uint64_t(t));
        perturb.fill_gaussian(eps);

        // common random numbers: one key per iteration shared by all candidates
        const uint64_t cand_key = mix64(seed, mix64(0xE5u, uint64_t(t)));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
        for (int k = 0; k < pop; ++k) {
            const int i = k / 2;
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            std::vector<double> cand(theta);
            for (int d = 0; d < dim; ++d) cand[d] += sign * sigma * eps[std::size_t(i) * dim + d];
            const ObjectiveValue v = objective(cand, cand_key);
            losses[k] = v.loss;
            unstable[k] = v.n_unstable;
            nwin[k] = v.n_windows;
        }

        // centered-rank fitness shaping; ties broken by candidate index
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return losses[a] < losses[b]; });
        std::vector<double> utility(pop);
        for (int r = 0; r < pop; ++r)
            utility[order[r]] = (double(pop - 1) / 2.0 - r) / double(pop - 1);

        for (int d = 0; d < dim; ++d) {
            double gsum = 0.0;
            for (int k = 0; k < pop; ++k) {
                const int i = k / 2;
                const double sign = (k % 2 == 0) ? 1.0 : -1.0;
                gsum += utility[k] * sign * eps[std::size_t(i) * dim + d];
            }
            theta[d] += lr * gsum / (double(pop) / 2.0);
        }

        const ObjectiveValue vm = eval(theta, eval_key);
        int unstable_total = 0;
        bool any_stable = vm.n_windows == 0 || vm.n_unstable < vm.n_windows;
        for (int k = 0; k < pop; ++k) {
            unstable_total += unstable[k];
            if (nwin[k] == 0 || unstable[k] < nwin[k]) any_stable = true;
        }
        res.ever_finite = res.ever_finite || any_stable;
        if (vm.loss < res.best_loss) {
            res.best_loss = vm.loss;
            res.best_theta = theta;
        }

        IterRecord rec;
        rec.iter = t;
        rec.mean_loss = vm.loss;
        rec.best_cand_loss = losses[order[0]];
        rec.sigma = sigma;
        rec.lr = lr;
        rec.unstable = unstable_total;
        rec.theta_hash = fnv1a64(theta.data(), theta.size() * 8);
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t_start)
                          .count();
        res.record.iters.push_back(rec);
    }
    return res;
}

void TrainRecord::append_csv(const std::filesystem::path& path, uint64_t config_hash,
                             int phase, int w) const {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream os(path, std::ios::app);
    if (!os) throw std::runtime_error("cannot open record csv: " + path.string());
    if (fresh) {
        os << "# config=" << hex64(config_hash) << " version=" << kCodeVersion << "\n";
        os << "phase,w,iter,mean_loss,best_cand_loss,sigma,lr,unstable,theta_hash,wall_ms\n";
    }
    for (const auto& r : iters) {
        os << phase << "," << w << "," << r.iter << "," << fmt_g17(r.mean_loss) << ","
           << fmt_g17(r.best_cand_loss) << "," << fmt_g17(r.sigma) << "," << fmt_g17(r.lr)
           << "," << r.unstable << "," << hex64(r.theta_hash) << ",";
        // wall time is informational, not part of the reproducible payload
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", r.wall_ms);
        os << buf << "\n";
    }
}

TrainResult train_closure(std::span<const LayeredField> series,
                          const closure::ClosureFamily& family, const TrainConfig& cfg,
                          const qg::QgParams& coarse, uint64_t seed,
                          const std::filesystem::path* checkpoint_dir, bool resume,
                          uint64_t config_hash) {
    cfg.validate();
    const int max_w = cfg.curriculum.back().w;
    if (series.size() < std::size_t(max_w) + 1)
        throw TrainingError("train_closure: series too short for the largest window");

    closure::ClosureParams p = closure::ClosureParams::zeros(family);
    TrainResult out;

    for (std::size_t k = 0; k < cfg.curriculum.size(); ++k) {
        const TrainPhase& phase = cfg.curriculum[k];
        const std::filesystem::path ckpt =
            checkpoint_dir ? *checkpoint_dir / ("phase_" + std::to_string(k) + ".closure")
                           : std::filesystem::path();
        if (resume && checkpoint_dir && std::filesystem::exists(ckpt)) {
            p = io::read_closure(ckpt);
            out.phase_final_loss.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }

        scoring::LossConfig loss_cfg;
        loss_cfg.w = phase.w;
        loss_cfg.S = cfg.S;
        loss_cfg.instability_penalty = cfg.instability_penalty;
        const int total_windows = scoring::n_windows(series.size(), phase.w);

        Objective objective = [&, loss_cfg, total_windows](std::span<const double> theta,
                                                           uint64_t key) {
            closure::ClosureParams cand{family, {theta.begin(), theta.end()}};
            const auto batch =
                sample_without_replacement(total_windows, cfg.batch, mix64(key, 0xBA7C4));
            const auto r = scoring::online_loss(series, cand, loss_cfg, coarse,
                                                mix64(key, 0x5EED), batch);
            return ObjectiveValue{r.loss, r.n_windows, r.n_unstable};
        };

        EsConfig es = cfg.es;
        es.iters = phase.iters;
        EsResult res = es_optimize(objective, p.theta, es, mix64(seed, uint64_t(k)));
        if (!res.ever_finite)
            throw TrainingError("train_closure: every candidate unstable in phase " +
                                std::to_string(k) + " (w=" + std::to_string(phase.w) + ")");
        p.theta = res.best_theta;
        out.phase_final_loss.push_back(res.best_loss);
        for (auto& r : res.record.iters) out.record.iters.push_back(r);

        if (checkpoint_dir) {
            std::filesystem::create_directories(*checkpoint_dir);
            io::write_closure(ckpt, p);
            res.record.append_csv(*checkpoint_dir / "train_record.csv", config_hash, int(k),
                                  phase.w);
        }
    }
    out.params = p;
    return out;
}

}  // namespace cgqg::calibrate
