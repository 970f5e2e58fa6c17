#include "cvtn/checkpoint.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <fstream>
#include <sstream>

namespace cvtn {

namespace {

constexpr char kMagic[4] = {'C', 'V', 'T', 'N'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::vector<uint8_t>& out, const T& v) {
    const auto* p = reinterpret_cast<const uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

void put_string(std::vector<uint8_t>& out, const std::string& s) {
    put<uint32_t>(out, static_cast<uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

void put_tensor(std::vector<uint8_t>& out, const Tensor& t) {
    put<uint32_t>(out, static_cast<uint32_t>(t.ndim()));
    for (int64_t d : t.shape()) put<int64_t>(out, d);
    const auto* p = reinterpret_cast<const uint8_t*>(t.data());
    out.insert(out.end(), p, p + sizeof(double) * static_cast<size_t>(t.numel()));
}

class Reader {
public:
    explicit Reader(std::vector<uint8_t> bytes) : bytes_(std::move(bytes)) {}

    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size()) throw IoError("checkpoint: truncated file");
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string get_string() {
        const uint32_t n = get<uint32_t>();
        if (pos_ + n > bytes_.size()) throw IoError("checkpoint: truncated file");
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    void get_tensor_into(Tensor& t, const std::string& name) {
        const uint32_t ndim = get<uint32_t>();
        Shape shape(ndim);
        for (uint32_t i = 0; i < ndim; ++i) shape[i] = get<int64_t>();
        if (shape != t.shape()) throw IoError("checkpoint: shape mismatch for parameter '" + name + "'");
        const size_t count = sizeof(double) * static_cast<size_t>(t.numel());
        if (pos_ + count > bytes_.size()) throw IoError("checkpoint: truncated file");
        std::memcpy(t.data(), bytes_.data() + pos_, count);
        pos_ += count;
    }

private:
    std::vector<uint8_t> bytes_;
    size_t pos_ = 0;
};

std::vector<uint8_t> encode_config(const ModelConfig& cfg) {
    std::vector<uint8_t> out;
    put<int64_t>(out, cfg.lookback);
    put<int64_t>(out, cfg.horizon);
    put<int64_t>(out, cfg.channels);
    put<int64_t>(out, cfg.cve_layers);
    put<int64_t>(out, cfg.cte_layers);
    put<int64_t>(out, cfg.heads);
    put<int64_t>(out, cfg.d_ff);
    put<int64_t>(out, cfg.growth_r);
    put<int64_t>(out, cfg.kernel);
    put<uint8_t>(out, cfg.trend_branch ? 1 : 0);
    put<uint8_t>(out, cfg.cte_frame == CteFrame::Normalized ? 0 : 1);
    put<uint8_t>(out, cfg.activation == Activation::Gelu ? 0 : 1);
    put<double>(out, cfg.dropout);
    put<double>(out, cfg.revin_eps);
    return out;
}

ModelConfig decode_config(Reader& r) {
    ModelConfig cfg;
    cfg.lookback = r.get<int64_t>();
    cfg.horizon = r.get<int64_t>();
    cfg.channels = r.get<int64_t>();
    cfg.cve_layers = r.get<int64_t>();
    cfg.cte_layers = r.get<int64_t>();
    cfg.heads = r.get<int64_t>();
    cfg.d_ff = r.get<int64_t>();
    cfg.growth_r = r.get<int64_t>();
    cfg.kernel = r.get<int64_t>();
    cfg.trend_branch = r.get<uint8_t>() != 0;
    cfg.cte_frame = r.get<uint8_t>() == 0 ? CteFrame::Normalized : CteFrame::Raw;
    cfg.activation = r.get<uint8_t>() == 0 ? Activation::Gelu : Activation::Relu;
    cfg.dropout = r.get<double>();
    cfg.revin_eps = r.get<double>();
    return cfg;
}

} // namespace

std::string sha256_hex(const std::vector<uint8_t>& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw ContractError("sha256_hex: digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::vector<uint8_t> serialize_group(const std::vector<std::pair<std::string, Tensor*>>& group) {
    std::vector<uint8_t> out;
    put<uint64_t>(out, group.size());
    for (const auto& [name, tensor] : group) {
        put_string(out, name);
        put_tensor(out, *tensor);
    }
    return out;
}

void save_checkpoint(const std::string& path, CvtnModel& model) {
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put<uint32_t>(out, kVersion);
    std::vector<uint8_t> cfg = encode_config(model.config());
    put<uint32_t>(out, static_cast<uint32_t>(cfg.size()));
    out.insert(out.end(), cfg.begin(), cfg.end());
    std::vector<uint8_t> params = serialize_group(model.all_params());
    out.insert(out.end(), params.begin(), params.end());

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_checkpoint: cannot open '" + path + "'");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("save_checkpoint: write failed for '" + path + "'");
}

CvtnModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_checkpoint: cannot open '" + path + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r(std::move(bytes));
    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.get<uint8_t>());
    if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("load_checkpoint: bad magic in '" + path + "'");
    const uint32_t version = r.get<uint32_t>();
    if (version != kVersion) {
        throw IoError("load_checkpoint: unsupported version " + std::to_string(version));
    }
    r.get<uint32_t>();  // config block length
    ModelConfig cfg = decode_config(r);

    CvtnModel model(cfg, 0);
    auto params = model.all_params();
    const uint64_t count = r.get<uint64_t>();
    if (count != params.size()) {
        throw IoError("load_checkpoint: parameter count mismatch (" + std::to_string(count) + " vs " +
                      std::to_string(params.size()) + ")");
    }
    for (uint64_t i = 0; i < count; ++i) {
        const std::string name = r.get_string();
        if (name != params[i].first) {
            throw IoError("load_checkpoint: unexpected parameter '" + name + "', wanted '" + params[i].first + "'");
        }
        r.get_tensor_into(*params[i].second, name);
    }
    return model;
}

void write_manifest(const std::string& path, CvtnModel& model) {
    std::ofstream f(path);
    if (!f) throw IoError("write_manifest: cannot open '" + path + "'");
    for (const auto& [name, tensor] : model.all_params()) {
        std::ostringstream shape;
        for (size_t i = 0; i < tensor->shape().size(); ++i) {
            if (i) shape << "x";
            shape << tensor->shape()[i];
        }
        f << name << " " << shape.str() << " "
          << sha256_hex(serialize_group({{name, tensor}})) << "\n";
    }
}

} // namespace cvtn
