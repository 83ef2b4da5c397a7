#ifndef DATESPOT_MODEL_IO_HPP
#define DATESPOT_MODEL_IO_HPP

// Binary containers:
//  - `DSPOT1` model files: alphabet, per-symbol topology and GMM parameters,
//    optional frame-classifier and PCA sections. Doubles are stored raw
//    (little-endian IEEE-754) so save/load round-trips bit-exactly.
//  - `DSFEAT1` feature dumps: one record per line image.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "datespot/features.hpp"
#include "datespot/hmm.hpp"
#include "datespot/tandem.hpp"

namespace datespot {

namespace io_detail {

static_assert(sizeof(double) == 8 && sizeof(float) == 4);

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("unexpected end of file");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    write_u32(os, std::uint32_t(v));
    write_u32(os, std::uint32_t(v >> 32));
}

inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t lo = read_u32(is);
    std::uint64_t hi = read_u32(is);
    return lo | (hi << 32);
}

inline void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

inline double read_f64(std::istream& is) {
    std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void write_f64v(std::ostream& os, const std::vector<double>& v) {
    write_u64(os, v.size());
    for (double x : v) write_f64(os, x);
}

inline std::vector<double> read_f64v(std::istream& is) {
    std::vector<double> v(read_u64(is));
    for (auto& x : v) x = read_f64(is);
    return v;
}

inline void write_str(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), std::streamsize(s.size()));
}

inline std::string read_str(std::istream& is) {
    std::string s(read_u64(is), '\0');
    is.read(s.data(), std::streamsize(s.size()));
    if (!is) throw std::runtime_error("unexpected end of file");
    return s;
}

inline void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    write_u64(os, std::uint64_t(m.rows()));
    write_u64(os, std::uint64_t(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(os, m(r, c));
}

inline Eigen::MatrixXd read_matrix(std::istream& is) {
    auto rows = Eigen::Index(read_u64(is));
    auto cols = Eigen::Index(read_u64(is));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_f64(is);
    return m;
}

inline void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
    write_u64(os, std::uint64_t(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(os, v(i));
}

inline Eigen::VectorXd read_vector(std::istream& is) {
    auto n = Eigen::Index(read_u64(is));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = read_f64(is);
    return v;
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Model container
// ---------------------------------------------------------------------------

struct ModelContainer {
    static constexpr std::uint32_t kVersion = 1;

    FeatureTag feature_tag = FeatureTag::Combined;
    SlidingWindowConfig window;
    bool shape_coded = false;
    ModelSet models;
    std::optional<FrameClassifier> classifier;
    std::optional<PcaTransform> pca;
};

inline void save_model(const ModelContainer& mc, const std::string& path) {
    using namespace io_detail;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write("DSPOT1\0", 7);
    write_u32(os, ModelContainer::kVersion);
    write_str(os, feature_tag_name(mc.feature_tag));
    write_u32(os, std::uint32_t(mc.window.line_height));
    write_u32(os, std::uint32_t(mc.window.window_width));
    write_f64(os, mc.window.overlap);
    write_u32(os, mc.shape_coded ? 1u : 0u);

    write_u64(os, mc.models.size());
    for (const auto& [sym, m] : mc.models) {
        write_str(os, sym);
        write_u32(os, std::uint32_t(m.num_states));
        write_f64v(os, m.log_self);
        write_f64v(os, m.log_next);
        for (const auto& em : m.states) {
            write_u32(os, std::uint32_t(em.dim));
            write_u64(os, em.comps.size());
            for (const auto& c : em.comps) {
                write_f64(os, c.weight);
                write_f64v(os, c.mean);
                write_f64v(os, c.var);
            }
        }
    }

    write_u32(os, mc.classifier ? 1u : 0u);
    if (mc.classifier) {
        const auto& clf = *mc.classifier;
        write_u32(os, std::uint32_t(clf.in_dim()));
        write_u32(os, std::uint32_t(clf.hidden_dim()));
        write_u32(os, std::uint32_t(clf.out_dim()));
        write_matrix(os, clf.w1());
        write_vector(os, clf.b1());
        write_matrix(os, clf.w2());
        write_vector(os, clf.b2());
    }
    write_u32(os, mc.pca ? 1u : 0u);
    if (mc.pca) {
        const auto& p = *mc.pca;
        write_u32(os, std::uint32_t(p.in_dim));
        write_u32(os, std::uint32_t(p.out_dim));
        write_vector(os, p.mean);
        write_matrix(os, p.projection);
        write_vector(os, p.eigenvalues);
        write_vector(os, p.post_mean);
        write_vector(os, p.post_std);
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline ModelContainer load_model(const std::string& path) {
    using namespace io_detail;
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open model file: " + path);
    char magic[7];
    is.read(magic, 7);
    if (!is || std::memcmp(magic, "DSPOT1\0", 7) != 0)
        throw std::runtime_error("not a model file (bad magic): " + path);
    std::uint32_t version = read_u32(is);
    if (version != ModelContainer::kVersion)
        throw std::runtime_error("unsupported model version " + std::to_string(version));

    ModelContainer mc;
    std::string tag = read_str(is);
    if (tag == "binary") mc.feature_tag = FeatureTag::Binary;
    else if (tag == "gray") mc.feature_tag = FeatureTag::Gray;
    else if (tag == "combined") mc.feature_tag = FeatureTag::Combined;
    else if (tag == "tandem") mc.feature_tag = FeatureTag::Tandem;
    else throw std::runtime_error("unknown feature tag '" + tag + "'");
    mc.window.line_height = int(read_u32(is));
    mc.window.window_width = int(read_u32(is));
    mc.window.overlap = read_f64(is);
    mc.shape_coded = read_u32(is) != 0;

    std::uint64_t n_models = read_u64(is);
    for (std::uint64_t i = 0; i < n_models; ++i) {
        CharacterHmm m;
        m.symbol = read_str(is);
        m.num_states = int(read_u32(is));
        m.log_self = read_f64v(is);
        m.log_next = read_f64v(is);
        if (int(m.log_self.size()) != m.num_states || int(m.log_next.size()) != m.num_states)
            throw std::runtime_error("corrupt model file: transition size mismatch");
        m.states.resize(size_t(m.num_states));
        for (auto& em : m.states) {
            em.dim = int(read_u32(is));
            em.comps.resize(read_u64(is));
            for (auto& c : em.comps) {
                c.weight = read_f64(is);
                c.mean = read_f64v(is);
                c.var = read_f64v(is);
                if (int(c.mean.size()) != em.dim || int(c.var.size()) != em.dim)
                    throw std::runtime_error("corrupt model file: GMM size mismatch");
            }
        }
        mc.models.emplace(m.symbol, std::move(m));
    }

    if (read_u32(is) != 0) {
        int in = int(read_u32(is));
        int hidden = int(read_u32(is));
        int out = int(read_u32(is));
        FrameClassifier clf(in, hidden, out, 0);
        clf.w1() = read_matrix(is);
        clf.b1() = read_vector(is);
        clf.w2() = read_matrix(is);
        clf.b2() = read_vector(is);
        mc.classifier = std::move(clf);
    }
    if (read_u32(is) != 0) {
        PcaTransform p;
        p.in_dim = int(read_u32(is));
        p.out_dim = int(read_u32(is));
        p.mean = read_vector(is);
        p.projection = read_matrix(is);
        p.eigenvalues = read_vector(is);
        p.post_mean = read_vector(is);
        p.post_std = read_vector(is);
        mc.pca = std::move(p);
    }
    return mc;
}

// ---------------------------------------------------------------------------
// Feature dumps
// ---------------------------------------------------------------------------

struct FeatureRecord {
    std::string id;
    FeatureSequence seq;
};

inline void save_features(const std::vector<FeatureRecord>& records, const std::string& path) {
    using namespace io_detail;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write("DSFEAT1", 7);
    write_u64(os, records.size());
    for (const auto& r : records) {
        write_str(os, r.id);
        write_str(os, feature_tag_name(r.seq.tag));
        write_u32(os, std::uint32_t(r.seq.dim));
        write_u32(os, std::uint32_t(r.seq.count));
        os.write(reinterpret_cast<const char*>(r.seq.values.data()),
                 std::streamsize(r.seq.values.size() * sizeof(float)));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline std::vector<FeatureRecord> load_features(const std::string& path) {
    using namespace io_detail;
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open feature file: " + path);
    char magic[7];
    is.read(magic, 7);
    if (!is || std::memcmp(magic, "DSFEAT1", 7) != 0)
        throw std::runtime_error("not a feature file (bad magic): " + path);
    std::vector<FeatureRecord> records(read_u64(is));
    for (auto& r : records) {
        r.id = read_str(is);
        std::string tag = read_str(is);
        if (tag == "binary") r.seq.tag = FeatureTag::Binary;
        else if (tag == "gray") r.seq.tag = FeatureTag::Gray;
        else if (tag == "combined") r.seq.tag = FeatureTag::Combined;
        else if (tag == "tandem") r.seq.tag = FeatureTag::Tandem;
        else throw std::runtime_error("unknown feature tag '" + tag + "'");
        r.seq.dim = int(read_u32(is));
        r.seq.count = int(read_u32(is));
        r.seq.values.resize(size_t(r.seq.dim) * size_t(r.seq.count));
        is.read(reinterpret_cast<char*>(r.seq.values.data()),
                std::streamsize(r.seq.values.size() * sizeof(float)));
        if (!is) throw std::runtime_error("unexpected end of feature file");
    }
    return records;
}

}  // namespace datespot

#endif
