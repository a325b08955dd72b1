#pragma once

// Binary model container:
//   "SSA1" | u32 dim | u32 institution_count |
//   per institution: u32 id_length | id bytes | dim*dim f64, row-major
// All integers and floats little-endian. Training metadata goes in a JSON
// sidecar next to the model file (<path>.json).

#include "articulate/error.hpp"
#include "articulate/ssa.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace articulate {

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class ByteReader {
public:
    explicit ByteReader(std::string data) : data_(std::move(data)) {}
    std::uint32_t u32() { return static_cast<std::uint32_t>(read(4)); }
    std::uint64_t u64() { return read(8); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        ARTICULATE_REQUIRE(data_.size() - pos_ >= n, ErrorCode::MalformedRow, "model file truncated");
    }
    std::uint64_t read(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::string data_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::string serialize_model(const AlignmentModel& model) {
    std::string out = "SSA1";
    detail::put_u32(out, static_cast<std::uint32_t>(model.dim));
    detail::put_u32(out, static_cast<std::uint32_t>(model.matrices.size()));
    for (const auto& [id, m] : model.matrices) {
        detail::put_u32(out, static_cast<std::uint32_t>(id.size()));
        out += id;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) detail::put_u64(out, std::bit_cast<std::uint64_t>(m(r, c)));
    }
    return out;
}

inline AlignmentModel deserialize_model(std::string data) {
    ARTICULATE_REQUIRE(data.size() >= 12 && data.compare(0, 4, "SSA1") == 0, ErrorCode::MalformedRow,
                       "not an SSA1 model file");
    detail::ByteReader in(data.substr(4));
    AlignmentModel model;
    model.dim = in.u32();
    const std::uint32_t count = in.u32();
    const auto d = static_cast<Eigen::Index>(model.dim);
    for (std::uint32_t k = 0; k < count; ++k) {
        std::string id = in.bytes(in.u32());
        Matrix m(d, d);
        for (Eigen::Index r = 0; r < d; ++r)
            for (Eigen::Index c = 0; c < d; ++c) m(r, c) = std::bit_cast<double>(in.u64());
        ARTICULATE_REQUIRE(model.matrices.emplace(std::move(id), std::move(m)).second, ErrorCode::DuplicateId,
                           "model file repeats an institution id");
    }
    ARTICULATE_REQUIRE(in.at_end(), ErrorCode::MalformedRow, "trailing bytes after model payload");
    return model;
}

inline nlohmann::ordered_json model_metadata(const AlignmentModel& model) {
    nlohmann::ordered_json j;
    j["format"] = "SSA1";
    j["dim"] = model.dim;
    j["institutions"] = model.matrices.size();
    j["seed"] = model.seed;
    j["training_pairs"] = model.training_pairs;
    j["epochs_run"] = model.epochs_run;
    j["trained_on"] = model.trained_on;
    j["final_loss"] = model.final_loss;
    j["loss_history"] = model.loss_history;
    j["max_orthogonality_error"] = model.max_orthogonality_error();
    return j;
}

inline void save_model(const std::string& path, const AlignmentModel& model,
                       const nlohmann::ordered_json& extra = nlohmann::ordered_json::object()) {
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        ARTICULATE_REQUIRE(out, ErrorCode::IoError, "cannot write " + path);
        const auto bytes = serialize_model(model);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        ARTICULATE_REQUIRE(out.good(), ErrorCode::IoError, "write failed for " + path);
    }
    auto meta = model_metadata(model);
    for (const auto& [k, v] : extra.items()) meta[k] = v;
    std::ofstream side(path + ".json", std::ios::trunc);
    ARTICULATE_REQUIRE(side, ErrorCode::IoError, "cannot write " + path + ".json");
    side << meta.dump(2) << '\n';
}

inline AlignmentModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    ARTICULATE_REQUIRE(in, ErrorCode::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    auto model = deserialize_model(ss.str());
    std::ifstream side(path + ".json");
    if (side) {
        try {
            auto meta = nlohmann::json::parse(side);
            model.seed = meta.value("seed", std::uint64_t{0});
            model.training_pairs = meta.value("training_pairs", std::size_t{0});
            model.epochs_run = meta.value("epochs_run", std::size_t{0});
            model.trained_on = meta.value("trained_on", std::string{});
            model.final_loss = meta.value("final_loss", 0.0);
            model.loss_history = meta.value("loss_history", std::vector<double>{});
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedRow, path + ".json: " + e.what());
        }
    }
    return model;
}

} // namespace articulate
