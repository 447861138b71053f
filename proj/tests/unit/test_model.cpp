#include <doctest.h>

#include <cmath>

#include "plmforge/model/decoder.hpp"
#include "plmforge/model/infer.hpp"
#include "support/oracles.hpp"

using namespace plmforge;
using model::ModelConfig;
using model::ModelParams;

namespace {

ModelConfig tiny_config(int layers = 2, int heads = 2, int head_dim = 8, int vocab = 27) {
    ModelConfig cfg;
    cfg.n_layers = layers;
    cfg.n_heads = heads;
    cfg.head_dim = head_dim;
    cfg.context_len = 32;
    cfg.vocab_size = vocab;
    return cfg;
}

template <typename T>
std::vector<std::uint16_t> random_tokens(Rng& rng, const ModelConfig& cfg, std::size_t n) {
    std::vector<std::uint16_t> tokens(n);
    for (auto& t : tokens) {
        t = static_cast<std::uint16_t>(rng.below(static_cast<std::uint64_t>(cfg.vocab_size)));
    }
    return tokens;
}

// flatten every parameter tensor into one vector of pointers
template <typename T>
std::vector<num::Tensor<T>*> tensors_of(ModelParams<T>& p) {
    std::vector<num::Tensor<T>*> out;
    p.visit([&](const std::string&, num::Tensor<T>& t, bool) { out.push_back(&t); });
    return out;
}

} // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("config validation") {
    auto cfg = tiny_config();
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.d_model() == 16);
    CHECK(cfg.effective_rotary_dim() == 8);

    auto bad = cfg;
    bad.rotary_dim = 7;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.context_len = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("init_params: deterministic per seed, statistics in range") {
    auto cfg = tiny_config(4, 4, 25, 100); // embed is 100x100 = 10k elements
    cfg.rotary_dim = 24;
    auto p1 = model::init_params<double>(cfg, 7);
    auto p2 = model::init_params<double>(cfg, 7);
    auto p3 = model::init_params<double>(cfg, 8);

    bool identical = true, differs = false;
    auto t1 = tensors_of(p1), t2 = tensors_of(p2), t3 = tensors_of(p3);
    for (std::size_t i = 0; i < t1.size(); ++i) {
        if (t1[i]->vec() != t2[i]->vec()) identical = false;
        if (t1[i]->vec() != t3[i]->vec()) differs = true;
    }
    CHECK(identical);
    CHECK(differs);

    // sample mean of the 10k-element embedding within 3 sigma of zero
    double mean = 0.0;
    for (std::size_t i = 0; i < p1.embed.numel(); ++i) mean += p1.embed.at(i);
    mean /= static_cast<double>(p1.embed.numel());
    const double sigma_mean = 0.02 / std::sqrt(static_cast<double>(p1.embed.numel()));
    CHECK(std::fabs(mean) < 3.0 * sigma_mean);

    // output projections carry the 1/sqrt(2L) shrink
    double var_qkv = 0.0, var_out = 0.0;
    for (std::size_t i = 0; i < p1.layers[0].w_qkv.numel(); ++i) {
        var_qkv += p1.layers[0].w_qkv.at(i) * p1.layers[0].w_qkv.at(i);
    }
    var_qkv /= static_cast<double>(p1.layers[0].w_qkv.numel());
    for (std::size_t i = 0; i < p1.layers[0].w_attn_out.numel(); ++i) {
        var_out += p1.layers[0].w_attn_out.at(i) * p1.layers[0].w_attn_out.at(i);
    }
    var_out /= static_cast<double>(p1.layers[0].w_attn_out.numel());
    CHECK(std::sqrt(var_qkv) == doctest::Approx(0.02).epsilon(0.15));
    CHECK(std::sqrt(var_out) == doctest::Approx(0.02 / std::sqrt(8.0)).epsilon(0.15));
}

TEST_CASE("fresh init keeps logit std inside the sanity band") {
    ModelConfig cfg = tiny_config(4, 4, 16, 28);
    cfg.context_len = 64;
    auto p = model::init_params<float>(cfg, 3);
    Rng rng(5);
    auto tokens = random_tokens<float>(rng, cfg, 64);
    auto logits = model::forward_logits(p, tokens, 1, 64);
    double mean = 0.0;
    for (std::size_t i = 0; i < logits.numel(); ++i) mean += logits.at(i);
    mean /= static_cast<double>(logits.numel());
    double var = 0.0;
    for (std::size_t i = 0; i < logits.numel(); ++i) {
        var += (logits.at(i) - mean) * (logits.at(i) - mean);
    }
    var /= static_cast<double>(logits.numel());
    const double stddev = std::sqrt(var);
    CHECK(stddev > 0.1);
    CHECK(stddev < 10.0);
}

TEST_CASE("rotary: position zero is the identity, norms are preserved") {
    num::RotaryTable<double> rot(8, 32);
    Rng rng(7);
    std::vector<double> head(8);
    for (auto& v : head) v = rng.normal();
    auto at0 = head;
    rot.apply(at0.data(), 0);
    CHECK(at0 == head);

    for (std::size_t pos : {1, 5, 31}) {
        auto rotated = head;
        rot.apply(rotated.data(), pos);
        double n0 = 0.0, n1 = 0.0;
        for (std::size_t i = 0; i < 8; ++i) {
            n0 += head[i] * head[i];
            n1 += rotated[i] * rotated[i];
        }
        CHECK(n1 == doctest::Approx(n0).epsilon(1e-12));
    }
}

TEST_CASE("rotary: scores depend only on relative position") {
    num::RotaryTable<double> rot(8, 16);
    Rng rng(11);
    std::vector<double> q(8), k(8);
    for (auto& v : q) v = rng.normal();
    for (auto& v : k) v = rng.normal();

    auto dot_at = [&](std::size_t m, std::size_t n) {
        auto qm = q, kn = k;
        rot.apply(qm.data(), m);
        rot.apply(kn.data(), n);
        double acc = 0.0;
        for (std::size_t i = 0; i < 8; ++i) acc += qm[i] * kn[i];
        return acc;
    };
    for (std::size_t delta = 0; delta < 8; ++delta) {
        const double ref = dot_at(delta, 0);
        for (std::size_t n = 1; n + delta < 16; ++n) {
            CHECK(dot_at(n + delta, n) == doctest::Approx(ref).epsilon(1e-9));
        }
    }
}

TEST_CASE("rotary inverse undoes the rotation") {
    num::RotaryTable<double> rot(8, 16);
    Rng rng(13);
    std::vector<double> head(8);
    for (auto& v : head) v = rng.normal();
    auto round = head;
    rot.apply(round.data(), 9);
    rot.apply(round.data(), 9, /*inverse=*/true);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(round[i] == doctest::Approx(head[i]).epsilon(1e-12));
    }
}

TEST_CASE("block reduces to the identity when output projections are zero") {
    auto cfg = tiny_config(1);
    auto p = model::init_params<float>(cfg, 1);
    p.layers[0].w_attn_out.fill(0.0f);
    p.layers[0].b_attn_out.fill(0.0f);
    p.layers[0].w_mlp_out.fill(0.0f);
    p.layers[0].b_mlp_out.fill(0.0f);
    // with both branch outputs zeroed the residual path is exact; compare a
    // 1-layer model's pre-final-norm state via logits of a linear head model
    p.final_gain.fill(1.0f);
    p.final_bias.fill(0.0f);

    Rng rng(17);
    auto tokens = random_tokens<float>(rng, cfg, 6);
    auto with_block = model::forward_logits(p, tokens, 1, 6);

    // zero-layer reference: same embedding, final norm, head
    auto ref = p;
    ref.layers.clear();
    ref.config.n_layers = 0;
    auto without_block = model::forward_logits(ref, tokens, 1, 6);
    for (std::size_t i = 0; i < with_block.numel(); ++i) {
        CHECK(with_block.at(i) == without_block.at(i));
    }
}

TEST_CASE("causality: perturbing position j leaves logits before j bit-identical") {
    auto cfg = tiny_config(2, 2, 8, 27);
    auto p = model::init_params<float>(cfg, 23);
    Rng rng(29);
    const std::size_t S = 12;
    auto tokens = random_tokens<float>(rng, cfg, S);
    auto base = model::forward_logits(p, tokens, 1, S);

    for (std::size_t j = 1; j < S; ++j) {
        auto mutated = tokens;
        mutated[j] = static_cast<std::uint16_t>((mutated[j] + 1) % cfg.vocab_size);
        auto out = model::forward_logits(p, mutated, 1, S);
        for (std::size_t t = 0; t < j; ++t) {
            for (std::size_t v = 0; v < static_cast<std::size_t>(cfg.vocab_size); ++v) {
                CHECK(out.at(t, v) == base.at(t, v)); // exact float equality
            }
        }
    }
}

TEST_CASE("PAD tokens after a packed record do not change earlier logits") {
    auto cfg = tiny_config();
    auto p = model::init_params<float>(cfg, 31);
    std::vector<std::uint16_t> record{1, 5, 9, 12, 2};
    auto padded = record;
    padded.resize(10, 0);
    auto short_logits = model::forward_logits(p, record, 1, record.size());
    auto long_logits = model::forward_logits(p, padded, 1, padded.size());
    for (std::size_t t = 0; t < record.size(); ++t) {
        for (std::size_t v = 0; v < static_cast<std::size_t>(cfg.vocab_size); ++v) {
            CHECK(short_logits.at(t, v) == long_logits.at(t, v));
        }
    }
}

TEST_CASE("identical batch rows produce identical logit rows") {
    auto cfg = tiny_config();
    auto p = model::init_params<float>(cfg, 37);
    std::vector<std::uint16_t> row{1, 4, 7, 2};
    std::vector<std::uint16_t> batch;
    batch.insert(batch.end(), row.begin(), row.end());
    batch.insert(batch.end(), row.begin(), row.end());
    auto logits = model::forward_logits(p, batch, 2, row.size());
    for (std::size_t t = 0; t < row.size(); ++t) {
        for (std::size_t v = 0; v < static_cast<std::size_t>(cfg.vocab_size); ++v) {
            CHECK(logits.at(t, v) == logits.at(row.size() + t, v));
        }
    }
}

TEST_CASE("sequence of length one yields valid logits") {
    auto cfg = tiny_config();
    auto p = model::init_params<float>(cfg, 41);
    auto logits = model::forward_logits(p, {1}, 1, 1);
    CHECK(logits.rows() == 1);
    CHECK(logits.all_finite());
}

TEST_CASE("forward rejects out-of-vocabulary tokens") {
    auto cfg = tiny_config();
    auto p = model::init_params<float>(cfg, 43);
    CHECK_THROWS_AS(model::forward_logits(p, {static_cast<std::uint16_t>(cfg.vocab_size)}, 1, 1),
                    ContractError);
}

TEST_CASE("tape forward equals the straight-line reimplementation") {
    auto cfg = tiny_config(2, 2, 8, 21);
    for (auto tied : {false, true}) {
        auto c = cfg;
        c.tie_lm_head = tied;
        auto p = model::init_params<double>(c, 47);
        Rng rng(53);
        const std::size_t S = 9;
        auto tokens = random_tokens<double>(rng, c, S);

        auto lib = model::forward_logits(p, tokens, 1, S);
        const auto naive = oracles::naive_decoder_logits(p, tokens);
        double worst = 0.0;
        for (std::size_t i = 0; i < lib.numel(); ++i) {
            worst = std::max(worst, std::fabs(lib.at(i) - naive[i]));
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("tape and no-grad forwards agree bit-for-bit") {
    auto cfg = tiny_config(2, 2, 8, 27);
    auto p = model::init_params<float>(cfg, 59);
    Rng rng(61);
    const std::size_t S = 10;
    auto tokens = random_tokens<float>(rng, cfg, S);

    num::Tape<float> tape;
    auto bound = model::bind_params(tape, p);
    auto rot = std::make_shared<const num::RotaryTable<float>>(model::make_rotary_table<float>(cfg, S));
    auto logits_var = model::decoder_forward(tape, bound, cfg, tokens, 1, S, rot);
    auto plain = model::forward_logits(p, tokens, 1, S);
    for (std::size_t i = 0; i < plain.numel(); ++i) {
        CHECK(tape.value(logits_var).at(i) == plain.at(i));
    }
}

TEST_CASE("loss: uniform logits give ln(vocab), hand example at 64-bit") {
    auto cfg = tiny_config(1, 1, 4, 32);
    num::Tape<double> tape;
    auto logits = tape.leaf(num::Tensor<double>({3, 32}));
    auto loss = model::decoder_loss(tape, logits, {1, 2, 3}, {1, 1, 1});
    CHECK(tape.value(loss).value() == doctest::Approx(std::log(32.0)).epsilon(1e-12));

    // 3-token hand computation with explicit logits
    num::Tensor<double> hand({3, 3}, {1.0, 2.0, 0.5, 0.0, -1.0, 0.25, 3.0, 3.0, 3.0});
    std::vector<std::uint16_t> targets{1, 0, 2};
    double expect = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
        double se = 0.0;
        for (std::size_t c = 0; c < 3; ++c) se += std::exp(hand.at(r, c));
        expect += std::log(se) - hand.at(r, targets[r]);
    }
    expect /= 3.0;
    num::Tape<double> tape2;
    auto loss2 = model::decoder_loss(tape2, tape2.leaf(hand), targets, {1, 1, 1});
    CHECK(tape2.value(loss2).value() == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("full tiny-decoder gradients match finite differences at 64-bit") {
    auto cfg = tiny_config(1, 2, 4, 11);
    auto p = model::init_params<double>(cfg, 67);
    Rng rng(71);
    const std::size_t S = 5;
    auto tokens = random_tokens<double>(rng, cfg, S);
    std::vector<std::uint16_t> targets(S);
    for (std::size_t i = 0; i + 1 < S; ++i) targets[i] = tokens[i + 1];
    targets[S - 1] = 2;
    std::vector<std::uint8_t> mask(S, 1);
    mask[S - 1] = 0;

    num::Tape<double> tape;
    auto bound = model::bind_params(tape, p);
    auto rot = std::make_shared<const num::RotaryTable<double>>(model::make_rotary_table<double>(cfg, S));
    tape.backward(model::decoder_loss(
        tape, model::decoder_forward(tape, bound, cfg, tokens, 1, S, rot), targets, mask));
    auto grads = model::collect_grads(tape, bound, p);

    auto loss_fn = [&]() { return model::forward_nll(p, tokens, targets, mask, 1, S); };
    auto got_list = tensors_of(grads);
    auto param_list = tensors_of(p);
    double worst = 0.0;
    for (std::size_t t = 0; t < param_list.size(); ++t) {
        const auto fd = oracles::finite_diff(param_list[t]->vec(), loss_fn, 1e-4);
        std::vector<double> got(got_list[t]->vec());
        worst = std::max(worst, oracles::max_rel_err(got, fd));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("tied LM head gradients match finite differences") {
    auto cfg = tiny_config(1, 2, 4, 9);
    cfg.tie_lm_head = true;
    auto p = model::init_params<double>(cfg, 97);
    Rng rng(101);
    const std::size_t S = 4;
    auto tokens = random_tokens<double>(rng, cfg, S);
    std::vector<std::uint16_t> targets(S);
    for (std::size_t i = 0; i + 1 < S; ++i) targets[i] = tokens[i + 1];
    targets[S - 1] = 0;
    std::vector<std::uint8_t> mask(S, 1);

    num::Tape<double> tape;
    auto bound = model::bind_params(tape, p);
    auto rot = std::make_shared<const num::RotaryTable<double>>(
        model::make_rotary_table<double>(cfg, S));
    tape.backward(model::decoder_loss(
        tape, model::decoder_forward(tape, bound, cfg, tokens, 1, S, rot), targets, mask));
    auto grads = model::collect_grads(tape, bound, p);

    auto loss_fn = [&]() { return model::forward_nll(p, tokens, targets, mask, 1, S); };
    auto got_list = tensors_of(grads);
    auto param_list = tensors_of(p);
    double worst = 0.0;
    for (std::size_t t = 0; t < param_list.size(); ++t) {
        const auto fd = oracles::finite_diff(param_list[t]->vec(), loss_fn, 1e-4);
        std::vector<double> got(got_list[t]->vec());
        worst = std::max(worst, oracles::max_rel_err(got, fd));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("parallel block equals sequential block when the MLP branch is zeroed") {
    auto cfg = tiny_config(2);
    auto p = model::init_params<double>(cfg, 73);
    for (auto& lp : p.layers) {
        lp.w_mlp_out.fill(0.0);
        lp.b_mlp_out.fill(0.0);
    }
    Rng rng(79);
    auto tokens = random_tokens<double>(rng, cfg, 8);
    auto parallel = model::forward_logits(p, tokens, 1, 8);
    const auto sequential = oracles::naive_decoder_logits(p, tokens, /*sequential=*/true);
    for (std::size_t i = 0; i < parallel.numel(); ++i) {
        CHECK(parallel.at(i) == doctest::Approx(sequential[i]).epsilon(1e-9));
    }
}

TEST_CASE("cached incremental forward matches the batched forward") {
    auto cfg = tiny_config(2, 2, 8, 27);
    auto p = model::init_params<float>(cfg, 83);
    Rng rng(89);
    const std::size_t S = 14;
    auto tokens = random_tokens<float>(rng, cfg, S);

    model::InferSession<float> session(p);
    std::vector<std::vector<float>> cached;
    for (auto t : tokens) cached.push_back(session.step(t));

    auto full = model::forward_logits(p, tokens, 1, S);
    double worst = 0.0;
    for (std::size_t t = 0; t < S; ++t) {
        for (std::size_t v = 0; v < static_cast<std::size_t>(cfg.vocab_size); ++v) {
            worst = std::max(worst,
                             std::fabs(static_cast<double>(cached[t][v]) - full.at(t, v)));
        }
    }
    CHECK(worst < 1e-5);
}

TEST_SUITE_END();
