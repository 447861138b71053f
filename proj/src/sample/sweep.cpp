#include "plmforge/sample/sweep.hpp"

#include <cstdio>
#include <ostream>
#include <unordered_set>

#include "plmforge/parallel.hpp"

namespace plmforge::sample {

std::uint64_t cell_seed(std::uint64_t base_seed, double temperature, double top_p, int index) {
    return mix64(mix64(base_seed, seed_from_double(temperature)),
                 mix64(seed_from_double(top_p), static_cast<std::uint64_t>(index)));
}

std::vector<SweepRecord> sweep(const model::ModelParams<float>& params,
                               const seq::Vocabulary& vocab,
                               const std::vector<double>& temperatures,
                               const std::vector<double>& top_ps,
                               int n_per_cell, const SamplerConfig& base, int threads) {
    if (temperatures.empty() || top_ps.empty()) {
        throw ConfigError("sweep needs at least one temperature and one nucleus value");
    }
    if (n_per_cell < 1) throw ConfigError("n_per_cell must be at least 1");

    std::vector<SweepRecord> records(temperatures.size() * top_ps.size() *
                                     static_cast<std::size_t>(n_per_cell));
    const std::size_t per_t = top_ps.size() * static_cast<std::size_t>(n_per_cell);

    parallel_for(records.size(), threads, [&](std::size_t i) {
        const std::size_t ti = i / per_t;
        const std::size_t pi = (i % per_t) / static_cast<std::size_t>(n_per_cell);
        const int idx = static_cast<int>(i % static_cast<std::size_t>(n_per_cell));

        SamplerConfig cfg = base;
        cfg.temperature = temperatures[ti];
        cfg.top_p = top_ps[pi];
        cfg.seed = cell_seed(base.seed, cfg.temperature, cfg.top_p, idx);

        SweepRecord& out = records[i];
        out.cell = {cfg.temperature, cfg.top_p, idx, cfg.seed};
        out.record = generate(params, vocab, cfg);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "gen_T%g_P%g_%04d", cfg.temperature, cfg.top_p, idx);
        out.id = buf;
    });
    return records;
}

void write_library_fasta(std::ostream& out, const std::vector<SweepRecord>& records) {
    for (const auto& r : records) {
        out << '>' << r.id << "|T=" << r.cell.temperature << "|P=" << r.cell.top_p
            << "|seed=" << r.cell.seed
            << "|term=" << (r.record.termination == Termination::StopToken ? "stop" : "max-length")
            << '\n';
        const std::string& s = r.record.residues;
        for (std::size_t i = 0; i < s.size(); i += 62) out << s.substr(i, 62) << '\n';
        if (s.empty()) out << '\n';
    }
}

void write_library_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
    out << "id,temperature,top_p,seed,termination,n_tokens,mean_log_prob\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.9g", r.record.mean_log_prob());
        out << r.id << ',' << r.cell.temperature << ',' << r.cell.top_p << ',' << r.cell.seed
            << ',' << (r.record.termination == Termination::StopToken ? "stop" : "max-length")
            << ',' << r.record.log_probs.size() << ',' << buf << '\n';
    }
}

std::vector<SweepRecord> dedupe_library(std::vector<SweepRecord> records) {
    std::vector<SweepRecord> out;
    out.reserve(records.size());
    std::unordered_set<std::string> seen;
    for (auto& r : records) {
        if (seen.insert(r.record.residues).second) out.push_back(std::move(r));
    }
    return out;
}

} // namespace plmforge::sample
