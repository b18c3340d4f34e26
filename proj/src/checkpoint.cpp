#include "selqa/checkpoint.hpp"

#include <fstream>

#include "selqa/binary_io.hpp"
#include "selqa/error.hpp"

namespace selqa {

using nlohmann::json;

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    json meta = ckpt.meta;
    json flags = json::object();
    for (const auto& p : ckpt.params.items()) flags[p.name] = {{"embedding", p.embedding}, {"trainable", p.trainable}};
    meta["param_flags"] = std::move(flags);

    binio::put_magic(out, kCheckpointMagic);
    binio::put_u32(out, kCheckpointVersion);
    binio::put_string(out, meta.dump());
    binio::put_u32(out, static_cast<std::uint32_t>(ckpt.params.size()));
    for (const auto& p : ckpt.params.items()) {
        binio::put_string(out, p.name);
        binio::put_u32(out, 2);
        binio::put_u32(out, static_cast<std::uint32_t>(p.value.rows()));
        binio::put_u32(out, static_cast<std::uint32_t>(p.value.cols()));
        for (float v : p.value.data()) binio::put_f32(out, v);
    }
    if (!out) throw DataError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
    binio::expect_magic(in, kCheckpointMagic, "checkpoint");
    const std::uint32_t version = binio::get_u32(in);
    if (version != kCheckpointVersion)
        throw DataError("checkpoint: format version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    Checkpoint ckpt;
    try {
        ckpt.meta = json::parse(binio::get_string(in));
    } catch (const json::parse_error& e) {
        throw DataError(std::string("checkpoint: corrupt metadata: ") + e.what());
    }
    const json flags = ckpt.meta.value("param_flags", json::object());
    ckpt.meta.erase("param_flags");

    const std::uint32_t count = binio::get_u32(in);
    for (std::uint32_t k = 0; k < count; ++k) {
        std::string name = binio::get_string(in);
        const std::uint32_t rank = binio::get_u32(in);
        if (rank != 2) throw DataError("checkpoint: array " + name + " has unsupported rank " + std::to_string(rank));
        const std::uint32_t rows = binio::get_u32(in);
        const std::uint32_t cols = binio::get_u32(in);
        ad::Tensor<float> t(rows, cols);
        for (auto& v : t.data()) v = binio::get_f32(in);
        bool embedding = false, trainable = true;
        if (auto it = flags.find(name); it != flags.end()) {
            embedding = it->value("embedding", false);
            trainable = it->value("trainable", true);
        }
        ckpt.params.add(std::move(name), std::move(t), embedding, trainable);
    }
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path);
    write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path);
    return read_checkpoint(in);
}

}  // namespace selqa
