#include "plmforge/seqdata/dataset_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace plmforge::seq {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr char kMagic[4] = {'P', 'L', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

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
    if (!in) throw DataError("dataset shard truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_shard(const fs::path& path, const PackedBatch& batch) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write dataset shard: " + path.string());
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(batch.context_len));
    put_u32(out, static_cast<std::uint32_t>(batch.n_rows));
    for (std::uint16_t t : batch.inputs) {
        const unsigned char b[2] = {static_cast<unsigned char>(t & 0xff),
                                    static_cast<unsigned char>(t >> 8)};
        out.write(reinterpret_cast<const char*>(b), 2);
    }
}

void read_shard_tokens(const fs::path& path, PackedBatch& batch) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset shard: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("not a dataset shard: " + path.string());
    }
    if (get_u32(in) != kVersion) throw DataError("unsupported shard version: " + path.string());
    batch.context_len = get_u32(in);
    batch.n_rows = get_u32(in);
    batch.inputs.resize(batch.n_rows * batch.context_len);
    for (auto& t : batch.inputs) {
        unsigned char b[2];
        in.read(reinterpret_cast<char*>(b), 2);
        if (!in) throw DataError("dataset shard truncated: " + path.string());
        t = static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }

    // targets and loss mask are derived, not stored
    batch.targets.assign(batch.n_rows * batch.context_len, Vocabulary::kPad);
    batch.loss_mask.assign(batch.n_rows * batch.context_len, 0);
    for (std::size_t r = 0; r < batch.n_rows; ++r) {
        const std::uint16_t* in_row = batch.inputs.data() + r * batch.context_len;
        std::uint16_t* tg = batch.targets.data() + r * batch.context_len;
        std::uint8_t* mk = batch.loss_mask.data() + r * batch.context_len;
        for (std::size_t c = 0; c + 1 < batch.context_len; ++c) tg[c] = in_row[c + 1];
        for (std::size_t c = 0; c < batch.context_len; ++c) {
            mk[c] = (in_row[c] != Vocabulary::kPad && tg[c] != Vocabulary::kPad) ? 1 : 0;
        }
    }
}

json partition_entries(const PackedBatch& batch) {
    json entries = json::array();
    for (std::size_t r = 0; r < batch.n_rows; ++r) {
        for (const auto& b : batch.boundaries[r]) {
            entries.push_back(json{{"id", batch.entry_ids[b.entry]},
                                   {"direction", direction_name(batch.directions[b.entry])},
                                   {"row", r},
                                   {"begin", b.begin},
                                   {"end", b.end}});
        }
    }
    return entries;
}

} // namespace

void write_dataset(const std::string& dir, const Dataset& ds,
                   const std::vector<SequenceRecord>& records, const SplitSpec& split_spec,
                   const SplitResult& split) {
    fs::create_directories(dir);

    json partitions = json::object();
    for (const auto& [name, batch] : ds.partitions) {
        write_shard(fs::path(dir) / (name + ".bin"), batch);
        partitions[name] = json{{"file", name + ".bin"},
                                {"n_rows", batch.n_rows},
                                {"non_pad_tokens", batch.non_pad_tokens()},
                                {"entries", partition_entries(batch)}};
    }

    json manifest{{"format", "plmforge-dataset-v1"},
                  {"context_len", ds.context_len},
                  {"seed", ds.seed},
                  {"vocabulary", Vocabulary::standard().token_strings()},
                  {"partitions", partitions}};
    std::ofstream mf(fs::path(dir) / "dataset.json", std::ios::trunc);
    if (!mf) throw DataError("cannot write dataset manifest in " + dir);
    mf << manifest.dump(2) << '\n';

    json split_json{{"identity_threshold", split_spec.identity_threshold},
                    {"holdout_fraction", split_spec.holdout_fraction},
                    {"seed", split_spec.seed},
                    {"train_ids", json::array()},
                    {"heldout_ids", json::array()}};
    for (std::size_t i : split.train) split_json["train_ids"].push_back(records[i].id);
    for (std::size_t i : split.heldout) split_json["heldout_ids"].push_back(records[i].id);
    std::ofstream sf(fs::path(dir) / "split.json", std::ios::trunc);
    if (!sf) throw DataError("cannot write split manifest in " + dir);
    sf << split_json.dump(2) << '\n';

    std::ofstream cf(fs::path(dir) / "clusters.tsv", std::ios::trunc);
    if (!cf) throw DataError("cannot write clusters.tsv in " + dir);
    write_clusters_tsv(cf, records, split.clusters);
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "dataset.json");
    if (!mf) throw DataError("cannot open dataset manifest in " + dir);
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw DataError("malformed dataset manifest: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "plmforge-dataset-v1") {
        throw DataError("unrecognized dataset format in " + dir);
    }

    Dataset ds;
    ds.context_len = manifest.at("context_len").get<std::size_t>();
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    Vocabulary::validate_token_strings(
        manifest.at("vocabulary").get<std::vector<std::string>>());

    for (const auto& [name, part] : manifest.at("partitions").items()) {
        PackedBatch batch;
        read_shard_tokens(fs::path(dir) / part.at("file").get<std::string>(), batch);
        if (batch.context_len != ds.context_len) {
            throw DataError("shard context length disagrees with the dataset manifest");
        }
        batch.boundaries.assign(batch.n_rows, {});
        for (const auto& e : part.at("entries")) {
            const auto row = e.at("row").get<std::size_t>();
            if (row >= batch.n_rows) throw DataError("dataset entry row out of range");
            PackedBatch::Boundary b;
            b.begin = e.at("begin").get<std::size_t>();
            b.end = e.at("end").get<std::size_t>();
            b.entry = static_cast<std::uint32_t>(batch.entry_ids.size());
            batch.entry_ids.push_back(e.at("id").get<std::string>());
            batch.directions.push_back(e.at("direction").get<std::string>() == "c2n"
                                           ? Direction::C2N
                                           : Direction::N2C);
            batch.boundaries[row].push_back(b);
        }
        ds.partitions.emplace(name, std::move(batch));
    }
    return ds;
}

PackedBatch load_partition(const std::string& dir, const std::string& name) {
    Dataset ds = load_dataset(dir);
    auto it = ds.partitions.find(name);
    if (it == ds.partitions.end()) {
        throw DataError("dataset in " + dir + " has no partition '" + name + "'");
    }
    return std::move(it->second);
}

} // namespace plmforge::seq
