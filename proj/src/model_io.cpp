// Binary model container.
//
// Layout: the 8-byte magic "MVDIS1\n\0", then fields in a fixed order, all
// integers little-endian, doubles as their IEEE-754 bit pattern. Sequences are
// prefixed by a u64 element count.

#include <bit>
#include <cstring>
#include <fstream>

#include "mvdis/pipeline.hpp"

namespace mvdis {

namespace {

constexpr char kMagic[8] = {'M', 'V', 'D', 'I', 'S', '1', '\n', '\0'};
constexpr std::uint32_t kEndMarker = 0x454e4431;  // "END1"

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u32(std::uint32_t v) { raw(v, 4); }
    void u64(std::uint64_t v) { raw(v, 8); }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    template <typename T, typename F>
    void seq(const std::vector<T>& v, F&& each) {
        u64(v.size());
        for (const auto& e : v) each(e);
    }
    void matrix(const Matrix& m) {
        u64(m.rows());
        u64(m.cols());
        for (double v : m.data()) f64(v);
    }

private:
    void raw(std::uint64_t v, int bytes) {
        for (int b = 0; b < bytes; ++b) out_.put(static_cast<char>((v >> (8 * b)) & 0xff));
    }
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::string data) : data_(std::move(data)) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
    std::uint64_t u64() { return raw(8); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::size_t len = count(1);
        const char* p = take(len);
        return {p, len};
    }
    /// Element count, checked against the bytes left (each element needs at
    /// least `min_bytes`).
    std::size_t count(std::size_t min_bytes) {
        const std::uint64_t c = u64();
        if (min_bytes > 0 && c > (data_.size() - pos_) / min_bytes) fail();
        return static_cast<std::size_t>(c);
    }
    template <typename T, typename F>
    std::vector<T> seq(std::size_t min_bytes, F&& each) {
        std::vector<T> out(count(min_bytes));
        for (auto& e : out) e = each();
        return out;
    }
    Matrix matrix() {
        const std::uint64_t rows = u64();
        const std::uint64_t cols = u64();
        if (cols != 0 && rows > (data_.size() - pos_) / 8 / cols) fail();
        std::vector<double> v(rows * cols);
        for (auto& x : v) x = f64();
        return Matrix(rows, cols, std::move(v));
    }
    bool at_end() const { return pos_ == data_.size(); }
    const char* take(std::size_t n) {
        if (n > data_.size() - pos_) fail();
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }
    [[noreturn]] static void fail() { throw DataError("model file is truncated or corrupt"); }

private:
    std::uint64_t raw(int bytes) {
        const char* p = take(static_cast<std::size_t>(bytes));
        std::uint64_t v = 0;
        for (int b = 0; b < bytes; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
        return v;
    }
    std::string data_;
    std::size_t pos_ = 0;
};

void write_int_vec(Writer& w, const std::vector<int>& v) {
    w.seq(v, [&](int x) { w.i32(x); });
}
std::vector<int> read_int_vec(Reader& r) {
    return r.seq<int>(4, [&] { return r.i32(); });
}
void write_double_vec(Writer& w, const std::vector<double>& v) {
    w.seq(v, [&](double x) { w.f64(x); });
}
std::vector<double> read_double_vec(Reader& r) {
    return r.seq<double>(8, [&] { return r.f64(); });
}

void write_forest(Writer& w, const Forest& f) {
    w.u64(f.n_classes);
    w.u64(f.n_features);
    w.u64(f.seed);
    w.seq(f.trees, [&](const DecisionTree& t) {
        w.seq(t.nodes(), [&](const TreeNode& nd) {
            w.i32(nd.feature);
            w.f64(nd.threshold);
            w.i32(nd.left);
            w.i32(nd.right);
            write_int_vec(w, nd.class_counts);
            w.i32(nd.label);
        });
    });
    w.seq(f.in_bag, [&](const std::vector<int>& v) { write_int_vec(w, v); });
    w.seq(f.leaf_table, [&](const std::vector<NodeId>& v) { write_int_vec(w, v); });
}

Forest read_forest(Reader& r) {
    Forest f;
    f.n_classes = r.u64();
    f.n_features = r.u64();
    f.seed = r.u64();
    f.trees = r.seq<DecisionTree>(8, [&] {
        auto nodes = r.seq<TreeNode>(28, [&] {
            TreeNode nd;
            nd.feature = r.i32();
            nd.threshold = r.f64();
            nd.left = r.i32();
            nd.right = r.i32();
            nd.class_counts = read_int_vec(r);
            nd.label = r.i32();
            return nd;
        });
        return DecisionTree::from_nodes(std::move(nodes), f.n_features, f.n_classes);
    });
    f.in_bag = r.seq<std::vector<int>>(8, [&] { return read_int_vec(r); });
    f.leaf_table = r.seq<std::vector<NodeId>>(8, [&] { return read_int_vec(r); });
    if (f.in_bag.size() != f.trees.size() || f.leaf_table.size() != f.trees.size()) Reader::fail();
    for (std::size_t p = 0; p < f.trees.size(); ++p) {
        if (f.leaf_table[p].size() != f.leaf_table.front().size()) Reader::fail();
        for (NodeId id : f.leaf_table[p]) {
            if (id < 0 || static_cast<std::size_t>(id) >= f.trees[p].size() || !f.trees[p].is_leaf(id)) Reader::fail();
        }
    }
    return f;
}

}  // namespace

void save_model(const MvlModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file '" + path.string() + "'");
    out.write(kMagic, sizeof kMagic);
    Writer w(out);
    const MvlConfig& c = model.config;
    w.u8(static_cast<std::uint8_t>(c.measure));
    w.u64(c.p_trees);
    w.str(c.mtry);
    w.i32(c.k);
    w.f64(c.w);
    w.u64(c.seed);
    w.seq(model.class_table, [&](const std::string& s) { w.str(s); });
    write_int_vec(w, model.labels);
    w.seq(model.view_dims, [&](std::size_t d) { w.u64(d); });
    w.seq(model.view_forests, [&](const Forest& f) { write_forest(w, f); });
    w.seq(model.caches, [&](const MeasureCache& mc) {
        w.i32(mc.k);
        w.u64(mc.degenerate_paths);
        w.seq(mc.kdn, [&](const std::vector<double>& v) { write_double_vec(w, v); });
        w.seq(mc.confidence, [&](const std::vector<double>& v) { write_double_vec(w, v); });
    });
    w.seq(model.train_views, [&](const Matrix& m) { w.matrix(m); });
    w.u8(static_cast<std::uint8_t>(model.d_joint.measure));
    w.matrix(model.d_joint.values);
    write_forest(w, model.final_forest);
    w.u32(kEndMarker);
    if (!out) throw DataError("failed writing model file '" + path.string() + "'");
}

MvlModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw DataError("'" + path.string() + "' is not an MVDIS1 model file");
    }
    Reader r(bytes.substr(sizeof kMagic));
    auto read_measure = [&] {
        const std::uint8_t m = r.u8();
        if (m > static_cast<std::uint8_t>(Measure::euclidean)) Reader::fail();
        return static_cast<Measure>(m);
    };

    MvlModel model;
    MvlConfig& c = model.config;
    c.measure = read_measure();
    c.p_trees = r.u64();
    c.mtry = r.str();
    c.k = r.i32();
    c.w = r.f64();
    c.seed = r.u64();
    model.class_table = r.seq<std::string>(8, [&] { return r.str(); });
    model.labels = read_int_vec(r);
    model.view_dims = r.seq<std::size_t>(8, [&] { return static_cast<std::size_t>(r.u64()); });
    model.view_forests = r.seq<Forest>(24, [&] { return read_forest(r); });
    model.caches = r.seq<MeasureCache>(12, [&] {
        MeasureCache mc;
        mc.k = r.i32();
        mc.degenerate_paths = r.u64();
        mc.kdn = r.seq<std::vector<double>>(8, [&] { return read_double_vec(r); });
        mc.confidence = r.seq<std::vector<double>>(8, [&] { return read_double_vec(r); });
        return mc;
    });
    model.train_views = r.seq<Matrix>(16, [&] { return r.matrix(); });
    model.d_joint.measure = read_measure();
    model.d_joint.values = r.matrix();
    model.final_forest = read_forest(r);
    if (r.u32() != kEndMarker || !r.at_end()) Reader::fail();

    const std::size_t n = model.labels.size();
    const bool euclid = c.measure == Measure::euclidean;
    if (model.caches.size() != model.view_dims.size() ||
        (euclid ? model.train_views.size() : model.view_forests.size()) != model.view_dims.size() ||
        model.d_joint.values.rows() != n || model.d_joint.values.cols() != n || model.final_forest.n_features != n) {
        throw DataError("model file '" + path.string() + "' is internally inconsistent");
    }
    return model;
}

}  // namespace mvdis
