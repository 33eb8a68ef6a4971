#include "radsynth/common/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iterator>
#include <memory>
#include <stdexcept>

namespace radsynth {
namespace {

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("sha256: digest init failed");
        }
    }

    void update(const void* data, std::size_t size) {
        if (EVP_DigestUpdate(ctx_.get(), data, size) != 1) {
            throw std::runtime_error("sha256: digest update failed");
        }
    }

    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), out.data(), &len) != 1) {
            throw std::runtime_error("sha256: digest final failed");
        }
        static constexpr char kHex[] = "0123456789abcdef";
        std::string result;
        result.reserve(len * 2);
        for (unsigned int i = 0; i < len; ++i) {
            result.push_back(kHex[out[i] >> 4]);
            result.push_back(kHex[out[i] & 0xF]);
        }
        return result;
    }

private:
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx_;
};

}  // namespace

std::string sha256_hex(std::span<const unsigned char> bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_hex(std::string_view text) {
    Sha256 h;
    h.update(text.data(), text.size());
    return h.hex();
}

std::string sha256_files(const std::vector<std::filesystem::path>& files) {
    Sha256 h;
    for (const auto& file : files) {
        const std::string name = file.filename().string();
        h.update(name.data(), name.size());
        const auto bytes = read_file_bytes(file);
        h.update(bytes.data(), bytes.size());
    }
    return h.hex();
}

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
    // Write beside the target, then rename, so readers never see a partial file.
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw std::runtime_error("write failed: " + path.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    write_file_bytes(path, {reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

std::string read_text_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

}  // namespace radsynth
