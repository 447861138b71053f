#include "plmforge/train/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "plmforge/seqdata/vocabulary.hpp"

namespace plmforge::train {

namespace {

using nlohmann::json;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("checkpoint blob truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

float get_f32(std::istream& in) {
    const std::uint32_t bits = get_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void write_tensor(std::ostream& out, const num::Tensor<float>& t) {
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t.numel(); ++i) put_f32(out, t.at(i));
}

num::Tensor<float> read_tensor(std::istream& in, const std::vector<std::size_t>& expect_shape) {
    const std::uint32_t rank = get_u32(in);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = get_u32(in);
    if (shape != expect_shape) {
        throw DataError("checkpoint tensor shape does not match the manifest/config");
    }
    num::Tensor<float> t(shape);
    for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = get_f32(in);
    return t;
}

json model_config_to_json(const model::ModelConfig& c) {
    return json{{"n_layers", c.n_layers},       {"n_heads", c.n_heads},
                {"head_dim", c.head_dim},       {"context_len", c.context_len},
                {"vocab_size", c.vocab_size},   {"rotary_dim", c.rotary_dim},
                {"tie_lm_head", c.tie_lm_head}};
}

model::ModelConfig model_config_from_json(const json& j) {
    model::ModelConfig c;
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.head_dim = j.at("head_dim").get<int>();
    c.context_len = j.at("context_len").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.rotary_dim = j.at("rotary_dim").get<int>();
    c.tie_lm_head = j.at("tie_lm_head").get<bool>();
    return c;
}

json train_config_to_json(const TrainConfig& c) {
    return json{{"peak_lr", c.peak_lr},
                {"warmup_steps", c.warmup_steps},
                {"total_steps", c.total_steps},
                {"min_lr_ratio", c.min_lr_ratio},
                {"weight_decay", c.weight_decay},
                {"clip_norm", c.clip_norm},
                {"batch_size_tokens", c.batch_size_tokens},
                {"grad_accum", c.grad_accum},
                {"seed", c.seed},
                {"checkpoint_every", c.checkpoint_every},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"adam_eps", c.adam_eps}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.peak_lr = j.at("peak_lr").get<double>();
    c.warmup_steps = j.at("warmup_steps").get<int>();
    c.total_steps = j.at("total_steps").get<int>();
    c.min_lr_ratio = j.at("min_lr_ratio").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.clip_norm = j.at("clip_norm").get<double>();
    c.batch_size_tokens = j.at("batch_size_tokens").get<long>();
    c.grad_accum = j.at("grad_accum").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.checkpoint_every = j.at("checkpoint_every").get<int>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    return c;
}

} // namespace

void save_checkpoint(const std::string& dir, const model::ModelParams<float>& params,
                     const AdamMoments<float>* moments, const TrainConfig& train_config,
                     long step, long tokens_seen) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    std::ofstream bin(fs::path(dir) / "tensors.bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw DataError("cannot write checkpoint blob in " + dir);

    json tensors = json::array();
    auto dump = [&](const std::string& name, const num::Tensor<float>& t) {
        const auto offset = static_cast<std::uint64_t>(bin.tellp());
        write_tensor(bin, t);
        tensors.push_back(json{{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    };

    params.visit([&](const std::string& name, const num::Tensor<float>& t, bool) { dump(name, t); });
    if (moments) {
        moments->m.visit([&](const std::string& name, const num::Tensor<float>& t, bool) {
            dump("adam_m." + name, t);
        });
        moments->v.visit([&](const std::string& name, const num::Tensor<float>& t, bool) {
            dump("adam_v." + name, t);
        });
    }
    bin.close();

    json manifest{{"format", "plmforge-checkpoint-v1"},
                  {"model", model_config_to_json(params.config)},
                  {"train", train_config_to_json(train_config)},
                  {"schedule", json{{"step", step}, {"tokens_seen", tokens_seen}}},
                  {"has_moments", moments != nullptr},
                  {"vocabulary", seq::Vocabulary::standard().token_strings()},
                  {"tensors", tensors}};

    std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::trunc);
    if (!mf) throw DataError("cannot write checkpoint manifest in " + dir);
    mf << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw DataError("cannot open checkpoint manifest in " + dir);
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw DataError("malformed checkpoint manifest: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "plmforge-checkpoint-v1") {
        throw DataError("unrecognized checkpoint format in " + dir);
    }

    Checkpoint ck;
    try {
        ck.params.config = model_config_from_json(manifest.at("model"));
        ck.train_config = train_config_from_json(manifest.at("train"));
        ck.step = manifest.at("schedule").at("step").get<long>();
        ck.tokens_seen = manifest.at("schedule").at("tokens_seen").get<long>();
        seq::Vocabulary::validate_token_strings(
            manifest.at("vocabulary").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
        throw DataError("incomplete checkpoint manifest: " + std::string(e.what()));
    }
    ck.params.config.validate();

    std::ifstream bin(fs::path(dir) / "tensors.bin", std::ios::binary);
    if (!bin) throw DataError("cannot open checkpoint blob in " + dir);

    // Template with zero-shaped tensors, then read in manifest order.
    ck.params = model::init_params<float>(ck.params.config, 0);
    const bool has_moments = manifest.value("has_moments", false);
    if (has_moments) ck.moments = AdamMoments<float>::zeros_like(ck.params);

    std::size_t expected = 0;
    ck.params.visit([&](const std::string&, const num::Tensor<float>&, bool) { ++expected; });
    if (has_moments) expected *= 3;
    if (manifest.at("tensors").size() != expected) {
        throw DataError("checkpoint tensor table does not match the model configuration");
    }

    std::size_t cursor = 0;
    auto read_next = [&](const std::string& name, num::Tensor<float>& t) {
        const auto& entry = manifest.at("tensors").at(cursor++);
        if (entry.at("name").get<std::string>() != name) {
            throw DataError("checkpoint tensor order mismatch at '" + name + "'");
        }
        bin.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
        t = read_tensor(bin, t.shape());
    };

    ck.params.visit(
        [&](const std::string& name, num::Tensor<float>& t, bool) { read_next(name, t); });
    if (has_moments) {
        ck.moments->m.visit([&](const std::string& name, num::Tensor<float>& t, bool) {
            read_next("adam_m." + name, t);
        });
        ck.moments->v.visit([&](const std::string& name, num::Tensor<float>& t, bool) {
            read_next("adam_v." + name, t);
        });
    }
    return ck;
}

} // namespace plmforge::train
