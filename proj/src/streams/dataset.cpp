#include "plastica/streams/dataset.hpp"

#include "plastica/seed.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>

namespace plastica::streams {

namespace {

// gzread transparently passes through uncompressed files.
class GzReader {
public:
    explicit GzReader(const std::filesystem::path& path) : path_(path.string()) {
        file_ = gzopen(path_.c_str(), "rb");
        if (!file_) throw IdxError(IdxError::Kind::Io, "cannot open " + path_);
    }
    ~GzReader() {
        if (file_) gzclose(file_);
    }
    GzReader(const GzReader&) = delete;
    GzReader& operator=(const GzReader&) = delete;

    void read_exact(void* buf, std::size_t n, const char* what) {
        auto* out = static_cast<unsigned char*>(buf);
        std::size_t got = 0;
        while (got < n) {
            const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n - got, 1u << 30));
            const int r = gzread(file_, out + got, chunk);
            if (r < 0) {
                int errnum = 0;
                const char* msg = gzerror(file_, &errnum);
                // a gzip stream that ends early reports Z_BUF_ERROR
                if (errnum == Z_BUF_ERROR) throw IdxError(IdxError::Kind::Truncated, path_ + ": truncated " + what);
                throw IdxError(IdxError::Kind::Io, "read error in " + path_ + ": " + msg);
            }
            if (r == 0) throw IdxError(IdxError::Kind::Truncated, path_ + ": truncated " + what);
            got += static_cast<std::size_t>(r);
        }
    }

    std::uint32_t read_u32(const char* what) {
        std::array<unsigned char, 4> b{};
        read_exact(b.data(), 4, what);
        return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    gzFile file_ = nullptr;
};

class GzWriter {
public:
    explicit GzWriter(const std::filesystem::path& path) : path_(path.string()) {
        file_ = gzopen(path_.c_str(), "wb");
        if (!file_) throw IdxError(IdxError::Kind::Io, "cannot write " + path_);
    }
    ~GzWriter() {
        if (file_) gzclose(file_);
    }
    GzWriter(const GzWriter&) = delete;
    GzWriter& operator=(const GzWriter&) = delete;

    void write(const void* buf, std::size_t n) {
        if (n && gzwrite(file_, buf, static_cast<unsigned>(n)) != static_cast<int>(n))
            throw IdxError(IdxError::Kind::Io, "write error in " + path_);
    }
    void write_u32(std::uint32_t v) {
        const std::array<unsigned char, 4> b{static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                             static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
        write(b.data(), 4);
    }

private:
    std::string path_;
    gzFile file_ = nullptr;
};

}  // namespace

void Dataset::validate() const {
    if (labels.empty()) throw std::invalid_argument("dataset " + name + " is empty");
    if (images.rank() != 2 || images.rows() != labels.size())
        throw std::invalid_argument("dataset " + name + ": image rows do not match label count");
    for (int y : labels)
        if (y < 0 || y >= num_classes) throw std::invalid_argument("dataset " + name + ": label out of range");
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
    Dataset out;
    out.images = images.gather_rows(indices);
    out.labels.reserve(indices.size());
    for (auto i : indices) out.labels.push_back(labels.at(i));
    out.num_classes = num_classes;
    out.name = name;
    return out;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    GzReader img(images_path);
    const std::uint32_t img_magic = img.read_u32("header");
    if (img_magic != kIdxImagesMagic)
        throw IdxError(IdxError::Kind::BadMagic, img.path() + ": bad image magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", img_magic);
            return std::string(buf);
        }());
    const std::uint32_t n_images = img.read_u32("header");
    const std::uint32_t rows = img.read_u32("header");
    const std::uint32_t cols = img.read_u32("header");
    if (n_images == 0 || rows == 0 || cols == 0) throw IdxError(IdxError::Kind::Format, img.path() + ": empty image set");

    GzReader lab(labels_path);
    const std::uint32_t lab_magic = lab.read_u32("header");
    if (lab_magic != kIdxLabelsMagic)
        throw IdxError(IdxError::Kind::BadMagic, lab.path() + ": bad label magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%08x", lab_magic);
            return std::string(buf);
        }());
    const std::uint32_t n_labels = lab.read_u32("header");
    if (n_labels != n_images)
        throw IdxError(IdxError::Kind::CountMismatch, "image count " + std::to_string(n_images) +
                                                          " does not match label count " + std::to_string(n_labels));

    const std::size_t d = std::size_t{rows} * cols;
    std::vector<unsigned char> pixels(std::size_t{n_images} * d);
    img.read_exact(pixels.data(), pixels.size(), "pixel payload");
    std::vector<unsigned char> raw_labels(n_labels);
    lab.read_exact(raw_labels.data(), raw_labels.size(), "label payload");

    Dataset ds;
    std::vector<double> values(pixels.size());
    std::transform(pixels.begin(), pixels.end(), values.begin(), [](unsigned char p) { return p / 255.0; });
    ds.images = Tensor({n_images, d}, std::move(values));
    ds.labels.assign(raw_labels.begin(), raw_labels.end());
    ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    ds.name = images_path.filename().string();
    return ds;
}

void write_idx(const Dataset& ds, const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               std::size_t image_rows, std::size_t image_cols) {
    if (image_rows * image_cols != ds.dim()) throw std::invalid_argument("image geometry does not match dataset dim");
    {
        GzWriter w(images_path);
        w.write_u32(kIdxImagesMagic);
        w.write_u32(static_cast<std::uint32_t>(ds.size()));
        w.write_u32(static_cast<std::uint32_t>(image_rows));
        w.write_u32(static_cast<std::uint32_t>(image_cols));
        std::vector<unsigned char> bytes(ds.images.size());
        auto v = ds.images.values();
        for (std::size_t i = 0; i < bytes.size(); ++i)
            bytes[i] = static_cast<unsigned char>(std::clamp(std::lround(v[i] * 255.0), 0L, 255L));
        w.write(bytes.data(), bytes.size());
    }
    GzWriter w(labels_path);
    w.write_u32(kIdxLabelsMagic);
    w.write_u32(static_cast<std::uint32_t>(ds.size()));
    std::vector<unsigned char> bytes(ds.labels.begin(), ds.labels.end());
    w.write(bytes.data(), bytes.size());
}

Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (n >= ds.size()) return ds.select(idx);
    Rng rng(derive_seed(seed, {stream_tag::kSubset, n}));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
    return ds.select(idx);
}

}  // namespace plastica::streams
