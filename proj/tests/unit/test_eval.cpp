#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "plmforge/eval/fitness.hpp"
#include "plmforge/eval/metrics.hpp"
#include "plmforge/eval/scoring.hpp"
#include "plmforge/eval/svg.hpp"
#include "support/oracles.hpp"

using namespace plmforge;
using namespace plmforge::eval;

namespace {

model::ModelParams<float> tiny_model(std::uint64_t seed = 5) {
    model::ModelConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.head_dim = 8;
    cfg.context_len = 64;
    cfg.vocab_size = static_cast<int>(seq::Vocabulary::standard().size());
    return model::init_params<float>(cfg, seed);
}

// all-zero parameters produce uniform logits everywhere
model::ModelParams<double> uniform_model(int vocab = 27) {
    model::ModelConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.head_dim = 4;
    cfg.context_len = 64;
    cfg.vocab_size = vocab;
    auto p = model::init_params<double>(cfg, 1);
    p.visit([](const std::string&, num::Tensor<double>& t, bool) { t.fill(0.0); });
    return p;
}

std::vector<double> random_scores(Rng& rng, std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = rng.normal();
    return out;
}

} // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("perplexity: uniform-logit model gives exactly the vocab size") {
    auto p = uniform_model(27);
    seq::TokenizedSequence ts;
    ts.tokens = {1, 5, 9, 13, 2};
    CHECK(perplexity(p, ts) == doctest::Approx(27.0).epsilon(1e-6));
}

TEST_CASE("perplexity: hand-computed 3-token example at 64-bit") {
    // single layer, everything zero except the LM bias: logits equal the bias
    auto p = uniform_model(5);
    p.lm_bias = num::Tensor<double>({5}, {0.1, -0.4, 1.2, 0.0, -2.0});
    seq::TokenizedSequence ts;
    ts.tokens = {1, 3, 2}; // predict token 3 then token 2

    double se = 0.0;
    for (std::size_t i = 0; i < 5; ++i) se += std::exp(p.lm_bias.at(i));
    const double nll = 0.5 * ((std::log(se) - p.lm_bias.at(3)) + (std::log(se) - p.lm_bias.at(2)));
    CHECK(perplexity(p, ts) == doctest::Approx(std::exp(nll)).epsilon(1e-10));
}

TEST_CASE("perplexity approaches 1 for a perfectly confident model") {
    auto p = uniform_model(5);
    // bias strongly prefers token 3 everywhere; score a sequence of 3s
    p.lm_bias = num::Tensor<double>({5}, {-60.0, -60.0, -60.0, 60.0, -60.0});
    seq::TokenizedSequence ts;
    ts.tokens = {3, 3, 3, 3, 3, 3};
    CHECK(perplexity(p, ts) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("corpus_perplexity: single sequence equals both modes; oracle recomputation") {
    auto p = uniform_model(27);
    seq::TokenizedSequence ts;
    ts.tokens = {1, 4, 7, 2};
    auto single = corpus_perplexity(p, {ts});
    CHECK(single.per_sequence_mean == doctest::Approx(perplexity(p, ts)).epsilon(1e-12));
    CHECK(single.token_weighted == doctest::Approx(perplexity(p, ts)).epsilon(1e-12));

    const auto pf = tiny_model();
    Rng rng(7);
    std::vector<seq::TokenizedSequence> corpus;
    for (int i = 0; i < 8; ++i) {
        corpus.push_back(seq::tokenize(seq::Vocabulary::standard(),
                                       oracles::random_residues(rng, 3 + rng.below(20)),
                                       seq::Direction::N2C));
    }
    auto report = corpus_perplexity(pf, corpus);
    double mean = 0.0, nll = 0.0, tokens = 0.0;
    for (const auto& ts2 : corpus) {
        const double ppl = perplexity(pf, ts2);
        mean += ppl;
        nll += std::log(ppl) * static_cast<double>(ts2.tokens.size() - 1);
        tokens += static_cast<double>(ts2.tokens.size() - 1);
    }
    CHECK(report.per_sequence_mean == doctest::Approx(mean / 8.0).epsilon(1e-9));
    CHECK(report.token_weighted == doctest::Approx(std::exp(nll / tokens)).epsilon(1e-9));
}

TEST_CASE("log_likelihood: deterministic, equals -ln(ppl) for N2C") {
    const auto p = tiny_model();
    const auto& vocab = seq::Vocabulary::standard();
    const std::string s = "MKVLWAALLVT";
    CHECK(log_likelihood(p, vocab, s, ScoreMode::N2C) ==
          log_likelihood(p, vocab, s, ScoreMode::N2C));

    const double ll = log_likelihood(p, vocab, s, ScoreMode::N2C);
    const double ppl = perplexity(p, seq::tokenize(vocab, s, seq::Direction::N2C));
    CHECK(std::fabs(ll + std::log(ppl)) < 1e-9);

    const double both = log_likelihood(p, vocab, s, ScoreMode::MeanBoth);
    const double c2n = log_likelihood(p, vocab, s, ScoreMode::C2N);
    CHECK(both == doctest::Approx(0.5 * (ll + c2n)).epsilon(1e-12));

    // unnormalized score is the plain sum
    const double sum = log_likelihood(p, vocab, s, ScoreMode::N2C, /*normalize=*/false);
    CHECK(sum == doctest::Approx(ll * static_cast<double>(s.size() + 1)).epsilon(1e-9));
}

TEST_CASE("spearman: perfect, inverted, and oracle agreement with ties") {
    CHECK(spearman({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(spearman({1, 1, 1}, {1, 2, 3}), MetricError);
    CHECK_THROWS_AS(spearman({1, 2}, {1, 2}), MetricError);

    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + rng.below(98);
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = static_cast<double>(rng.below(20)); // frequent ties
        for (auto& v : b) v = rng.normal();
        bool degenerate = true;
        for (std::size_t i = 1; i < n; ++i) degenerate = degenerate && a[i] == a[0];
        if (degenerate) continue;
        CHECK(spearman(a, b) ==
              doctest::Approx(oracles::spearman_bruteforce(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("auc: separation, null case, and pairwise oracle with ties") {
    CHECK(auc({5, 4, 1, 0}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(auc({1, 2}, {1, 1}), MetricError);

    Rng rng(13);
    std::vector<double> scores = random_scores(rng, 4000);
    std::vector<std::uint8_t> labels(4000);
    for (auto& l : labels) l = rng.below(2) == 0 ? 0 : 1;
    CHECK(auc(scores, labels) == doctest::Approx(0.5).epsilon(0.05)); // null ~ 0.5

    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 10 + rng.below(41);
        std::vector<double> s(n);
        std::vector<std::uint8_t> l(n);
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.below(8)); // tie-heavy
            l[i] = rng.below(2) ? 1 : 0;
            pos = pos || l[i];
            neg = neg || !l[i];
        }
        if (!pos || !neg) continue;
        CHECK(auc(s, l) == doctest::Approx(oracles::auc_bruteforce(s, l)).epsilon(1e-12));
    }
}

TEST_CASE("topk_avg: k=n mean, aligned argmax, and sort oracle") {
    std::vector<double> meas{0.0, 2.0, 4.0, 8.0};
    CHECK(topk_avg({1, 2, 3, 4}, meas, 4) ==
          doctest::Approx((0.0 + 0.25 + 0.5 + 1.0) / 4.0).epsilon(1e-12));
    CHECK(topk_avg(meas, meas, 1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(topk_avg({1, 2}, {1, 2}, 3), ConfigError);

    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.below(60);
        const std::size_t k = 1 + rng.below(n);
        auto scores = random_scores(rng, n);
        auto m = random_scores(rng, n);
        // brute-force oracle: sort index pairs by score descending (stable)
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        double lo = *std::min_element(m.begin(), m.end());
        double hi = *std::max_element(m.begin(), m.end());
        double expect = 0.0;
        for (std::size_t i = 0; i < k; ++i) expect += (m[order[i]] - lo) / (hi - lo);
        expect /= static_cast<double>(k);
        CHECK(topk_avg(scores, m, k) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("ensemble_scores: identity for one model, ties for reversed pair, oracle") {
    std::vector<double> s{0.3, 0.9, 0.1};
    auto combined = ensemble_scores({s});
    CHECK(combined == average_ranks(s));

    auto tied = ensemble_scores({{1, 2, 3}, {3, 2, 1}});
    CHECK(tied[0] == doctest::Approx(2.0));
    CHECK(tied[1] == doctest::Approx(2.0));
    CHECK(tied[2] == doctest::Approx(2.0));

    CHECK_THROWS_AS(ensemble_scores({{1, 2}, {1, 2, 3}}), ContractError);

    Rng rng(19);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 4 + rng.below(40);
        std::vector<std::vector<double>> models(3);
        for (auto& mscores : models) mscores = random_scores(rng, n);
        auto got = ensemble_scores(models);
        for (std::size_t i = 0; i < n; ++i) {
            double expect = 0.0;
            for (const auto& mscores : models) {
                double less = 0.0, equal = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (mscores[j] < mscores[i]) less += 1.0;
                    if (mscores[j] == mscores[i]) equal += 1.0;
                }
                expect += less + (equal + 1.0) / 2.0;
            }
            expect /= 3.0;
            CHECK(got[i] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("metrics are invariant under strictly increasing score transforms") {
    Rng rng(23);
    const std::size_t n = 60;
    auto scores = random_scores(rng, n);
    auto meas = random_scores(rng, n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % 3 == 0 ? 1 : 0;

    auto affine = scores;
    for (auto& v : affine) v = 2.0 * v + 1.0;
    auto squashed = scores;
    for (auto& v : squashed) v = std::tanh(v);

    for (const auto& transformed : {affine, squashed}) {
        CHECK(spearman(scores, meas) ==
              doctest::Approx(spearman(transformed, meas)).epsilon(1e-12));
        CHECK(auc(scores, labels) == doctest::Approx(auc(transformed, labels)).epsilon(1e-12));
        CHECK(topk_avg(scores, meas, 10) ==
              doctest::Approx(topk_avg(transformed, meas, 10)).epsilon(1e-12));
        CHECK(ensemble_scores({scores, meas}) == ensemble_scores({transformed, meas}));
    }
}

TEST_CASE("rank_and_filter: keep-all ordering, exact top half, sort oracle") {
    const auto p = tiny_model();
    const auto& vocab = seq::Vocabulary::standard();
    Rng rng(29);
    std::vector<std::string> lib;
    for (int i = 0; i < 12; ++i) lib.push_back(oracles::random_residues(rng, 8 + rng.below(8)));

    std::vector<double> scores;
    auto all = rank_and_filter(p, vocab, lib, 1.0, ScoreMode::N2C, 1, &scores);
    REQUIRE(all.size() == lib.size());
    for (std::size_t i = 1; i < all.size(); ++i) {
        CHECK(scores[all[i - 1]] >= scores[all[i]]);
    }

    auto half = rank_and_filter(p, vocab, lib, 0.5, ScoreMode::N2C);
    CHECK(half.size() == 6);
    // brute force: the kept set is exactly the top half by score
    std::vector<std::size_t> order(lib.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (std::size_t i = 0; i < half.size(); ++i) CHECK(half[i] == order[i]);

    CHECK(rank_and_filter(p, vocab, {}, 0.5, ScoreMode::N2C).empty());
}

TEST_CASE("fitness CSV loader validates header, labels, and numbers") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "plmforge_eval_test";
    fs::create_directories(dir);
    const auto csv = (dir / "ds.csv").string();
    {
        std::ofstream out(csv, std::ios::trunc);
        out << "sequence,measurement,label\nMKVL,1.5,1\nMKVI,0.5,0\nMKGL,2.5,1\n";
    }
    const auto ds = load_fitness_csv(csv, seq::Vocabulary::standard());
    CHECK(ds.size() == 3);
    CHECK(ds.labels.size() == 3);
    CHECK(ds.measurements[2] == 2.5);

    {
        std::ofstream out(csv, std::ios::trunc);
        out << "seq,fitness\nMKVL,1.0\n";
    }
    CHECK_THROWS_AS(load_fitness_csv(csv, seq::Vocabulary::standard()), DataError);
    fs::remove_all(dir);
}

TEST_CASE("run_benchmark: oracle and anti-oracle bracket the spearman range") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "plmforge_bench_test";
    fs::create_directories(dir);

    // fitness = sequence length; a model scoring by length ranks perfectly
    {
        std::ofstream out(dir / "lin.csv", std::ios::trunc);
        out << "sequence,measurement\n";
        for (int i = 0; i < 10; ++i) {
            out << std::string(4 + 2 * i, 'A') << ',' << i << '\n';
        }
        std::ofstream man(dir / "manifest.txt", std::ios::trunc);
        man << "# dataset manifest\nlin,lin.csv,spearman\n";
    }
    const auto datasets =
        load_benchmark_manifest((dir / "manifest.txt").string(), seq::Vocabulary::standard());
    REQUIRE(datasets.size() == 1);

    // uniform model: every token is equally likely, so the mean per-token
    // log-likelihood is constant and longer sequences do not score higher;
    // use the unnormalized trick via a length-proxy dataset instead: the
    // per-variant scores get replaced by measurement oracles below.
    std::vector<double> oracle_scores(datasets[0].measurements);
    CHECK(compute_metric(datasets[0], oracle_scores) == doctest::Approx(1.0));
    for (auto& v : oracle_scores) v = -v;
    CHECK(compute_metric(datasets[0], oracle_scores) == doctest::Approx(-1.0));

    // end-to-end: two models and the AVERAGE row per model
    const auto m1 = tiny_model(31);
    const auto m2 = tiny_model(32);
    auto rows = run_benchmark({{"m1", &m1}, {"m2", &m2}}, datasets, ScoreMode::N2C,
                              /*with_ensemble=*/true, 1);
    REQUIRE(rows.size() == 6); // (1 dataset + AVERAGE) x (2 models + ensemble)
    CHECK(rows[1].dataset == "AVERAGE");
    CHECK(rows[1].value == doctest::Approx(rows[0].value));
    fs::remove_all(dir);
}

TEST_CASE("benchmark rows isolate per-dataset failures") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "plmforge_bench_fail";
    fs::create_directories(dir);
    {
        std::ofstream ds(dir / "auc_nolabel.csv", std::ios::trunc);
        ds << "sequence,measurement\nMKVL,1\nMKVI,2\nMKGL,3\n";
        std::ofstream ok(dir / "ok.csv", std::ios::trunc);
        ok << "sequence,measurement\nMKVL,1\nMKVI,2\nMKGL,3\n";
        std::ofstream man(dir / "manifest.txt", std::ios::trunc);
        // auc without labels or threshold fails; spearman succeeds
        man << "bad,auc_nolabel.csv,auc\nok,ok.csv,spearman\n";
    }
    const auto datasets =
        load_benchmark_manifest((dir / "manifest.txt").string(), seq::Vocabulary::standard());
    const auto m = tiny_model(33);
    auto rows = run_benchmark({{"m", &m}}, datasets, ScoreMode::N2C, false, 1);
    REQUIRE(rows.size() == 3);
    CHECK(!rows[0].ok);
    CHECK(!rows[0].error.empty());
    CHECK(rows[1].ok);
    CHECK(rows[2].dataset == "AVERAGE");
    CHECK(rows[2].ok); // average over the datasets that scored
    fs::remove_all(dir);
}

TEST_CASE("SVG output is well-formed enough to nest and close tags") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "plmforge_svg_test";
    fs::create_directories(dir);
    const auto scatter = (dir / "scatter.svg").string();
    const auto histo = (dir / "histo.svg").string();
    svg::write_scatter(scatter, {1, 2, 3}, {3, 1, 2}, "score", "measurement", "demo & title");
    svg::write_histogram(histo, {0.1, 0.4, 0.4, 0.9}, 4, "identity", "demo");

    for (const auto& path : {scatter, histo}) {
        std::ifstream in(path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        CHECK(text.find("<svg") != std::string::npos);
        CHECK(text.find("</svg>") != std::string::npos);
        CHECK(text.find("& ") == std::string::npos); // ampersands are escaped
    }
    fs::remove_all(dir);
}

TEST_SUITE_END();
