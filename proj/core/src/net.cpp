#include "amlab/net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace amlab {

Tensor softmax(const Tensor& logits) {
    Tensor p(logits.shape());
    double mx = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (std::size_t i = 0; i < p.size(); ++i) p[i] /= sum;
    return p;
}

class Layer {
public:
    virtual ~Layer() = default;
    virtual std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) = 0;
    virtual Tensor forward(const Tensor& in) = 0;
    virtual Tensor backward(const Tensor& dout) = 0;
    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<Tensor*> grads() { return {}; }
};

namespace {

class DenseLayer final : public Layer {
public:
    DenseLayer(std::size_t in, std::size_t out)
        : in_(in), out_(out), w_({out, in}), b_({out}), dw_({out, in}), db_({out}) {}

    std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) override {
        if (in.size() != 1 || in[0] != in_)
            throw DimensionError("dense layer expects input of size " + std::to_string(in_));
        return {out_};
    }

    Tensor forward(const Tensor& x) override {
        cached_in_ = x;
        Tensor y({out_});
        for (std::size_t o = 0; o < out_; ++o) {
            double acc = b_[o];
            const double* row = w_.data() + o * in_;
            for (std::size_t i = 0; i < in_; ++i) acc += row[i] * x[i];
            y[o] = acc;
        }
        return y;
    }

    Tensor backward(const Tensor& dout) override {
        Tensor din({in_});
        for (std::size_t o = 0; o < out_; ++o) {
            double g = dout[o];
            db_[o] += g;
            double* dw_row = dw_.data() + o * in_;
            const double* w_row = w_.data() + o * in_;
            for (std::size_t i = 0; i < in_; ++i) {
                dw_row[i] += g * cached_in_[i];
                din[i] += g * w_row[i];
            }
        }
        return din;
    }

    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<Tensor*> grads() override { return {&dw_, &db_}; }

private:
    std::size_t in_, out_;
    Tensor w_, b_, dw_, db_, cached_in_;
};

class ReluLayer final : public Layer {
public:
    std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) override { return in; }

    Tensor forward(const Tensor& x) override {
        cached_in_ = x;
        Tensor y(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
        return y;
    }

    Tensor backward(const Tensor& dout) override {
        Tensor din(cached_in_.shape());
        for (std::size_t i = 0; i < din.size(); ++i)
            din[i] = cached_in_[i] > 0.0 ? dout[i] : 0.0;
        return din;
    }

private:
    Tensor cached_in_;
};

// Single-channel valid convolution, stride 1.
class Conv2dSmallLayer final : public Layer {
public:
    Conv2dSmallLayer(std::size_t h, std::size_t w, std::size_t channels, std::size_t kernel)
        : h_(h), w_(w), ch_(channels), k_(kernel),
          oh_(h - kernel + 1), ow_(w - kernel + 1),
          w_t_({channels, kernel, kernel}), b_({channels}),
          dw_({channels, kernel, kernel}), db_({channels}) {
        if (kernel == 0 || kernel > h || kernel > w)
            throw DimensionError("conv kernel does not fit input");
    }

    std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) override {
        if (in != std::vector<std::size_t>{h_, w_})
            throw DimensionError("conv layer expects input " + std::to_string(h_) + "x" +
                                 std::to_string(w_));
        return {ch_, oh_, ow_};
    }

    Tensor forward(const Tensor& x) override {
        cached_in_ = x;
        Tensor y({ch_, oh_, ow_});
        for (std::size_t c = 0; c < ch_; ++c)
            for (std::size_t i = 0; i < oh_; ++i)
                for (std::size_t j = 0; j < ow_; ++j) {
                    double acc = b_[c];
                    for (std::size_t a = 0; a < k_; ++a)
                        for (std::size_t b = 0; b < k_; ++b)
                            acc += w_t_[(c * k_ + a) * k_ + b] * x[(i + a) * w_ + (j + b)];
                    y[(c * oh_ + i) * ow_ + j] = acc;
                }
        return y;
    }

    Tensor backward(const Tensor& dout) override {
        Tensor din({h_, w_});
        for (std::size_t c = 0; c < ch_; ++c)
            for (std::size_t i = 0; i < oh_; ++i)
                for (std::size_t j = 0; j < ow_; ++j) {
                    double g = dout[(c * oh_ + i) * ow_ + j];
                    db_[c] += g;
                    for (std::size_t a = 0; a < k_; ++a)
                        for (std::size_t b = 0; b < k_; ++b) {
                            dw_[(c * k_ + a) * k_ + b] += g * cached_in_[(i + a) * w_ + (j + b)];
                            din[(i + a) * w_ + (j + b)] += g * w_t_[(c * k_ + a) * k_ + b];
                        }
                }
        return din;
    }

    std::vector<Tensor*> params() override { return {&w_t_, &b_}; }
    std::vector<Tensor*> grads() override { return {&dw_, &db_}; }

private:
    std::size_t h_, w_, ch_, k_, oh_, ow_;
    Tensor w_t_, b_, dw_, db_, cached_in_;
};

class FlattenLayer final : public Layer {
public:
    std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) override {
        return {Tensor::count(in)};
    }

    Tensor forward(const Tensor& x) override {
        in_shape_ = x.shape();
        return Tensor({x.size()}, x.flat());
    }

    Tensor backward(const Tensor& dout) override { return Tensor(in_shape_, dout.flat()); }

private:
    std::vector<std::size_t> in_shape_;
};

class SoftmaxOutputLayer final : public Layer {
public:
    std::vector<std::size_t> out_shape(const std::vector<std::size_t>& in) override {
        if (in.size() != 1) throw DimensionError("softmax expects a flat input");
        return in;
    }

    Tensor forward(const Tensor& z) override {
        cached_out_ = softmax(z);
        return cached_out_;
    }

    Tensor backward(const Tensor& dprobs) override {
        const Tensor& p = cached_out_;
        double dot = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) dot += dprobs[i] * p[i];
        Tensor dz(p.shape());
        for (std::size_t i = 0; i < p.size(); ++i) dz[i] = p[i] * (dprobs[i] - dot);
        return dz;
    }

private:
    Tensor cached_out_;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& s) {
    switch (s.kind) {
        case LayerKind::dense: return std::make_unique<DenseLayer>(s.d0, s.d1);
        case LayerKind::relu: return std::make_unique<ReluLayer>();
        case LayerKind::conv2d_small:
            return std::make_unique<Conv2dSmallLayer>(s.d0, s.d1, s.d2, s.d3);
        case LayerKind::flatten: return std::make_unique<FlattenLayer>();
        case LayerKind::softmax_output: return std::make_unique<SoftmaxOutputLayer>();
    }
    throw std::logic_error("unknown layer kind");
}

}  // namespace

Classifier::Classifier(std::vector<LayerSpec> specs, std::size_t num_classes, std::uint64_t seed)
    : specs_(std::move(specs)), num_classes_(num_classes) {
    if (num_classes_ < 2) throw std::invalid_argument("num_classes must be >= 2");
    build_and_check();
    init_params(seed);
}

Classifier::Classifier(const Classifier& other)
    : specs_(other.specs_), num_classes_(other.num_classes_), input_shape_(other.input_shape_) {
    for (const auto& s : specs_) layers_.push_back(make_layer(s));
    set_flat_params(other.flat_params());
}

Classifier& Classifier::operator=(const Classifier& other) {
    if (this != &other) {
        Classifier tmp(other);
        *this = std::move(tmp);
    }
    return *this;
}

Classifier::Classifier(Classifier&&) noexcept = default;
Classifier& Classifier::operator=(Classifier&&) noexcept = default;
Classifier::~Classifier() = default;

void Classifier::build_and_check() {
    if (specs_.empty()) throw DimensionError("classifier needs at least one layer");
    if (specs_.back().kind != LayerKind::softmax_output)
        throw DimensionError("classifier must end in softmax_output");
    // Derive the input shape from the first shaped layer.
    switch (specs_.front().kind) {
        case LayerKind::dense: input_shape_ = {specs_.front().d0}; break;
        case LayerKind::conv2d_small: input_shape_ = {specs_.front().d0, specs_.front().d1}; break;
        default: throw DimensionError("first layer must be dense or conv2d_small");
    }
    std::vector<std::size_t> shape = input_shape_;
    for (const auto& s : specs_) {
        layers_.push_back(make_layer(s));
        shape = layers_.back()->out_shape(shape);
    }
    if (shape != std::vector<std::size_t>{num_classes_})
        throw DimensionError("classifier output size does not match num_classes");
}

void Classifier::init_params(std::uint64_t seed) {
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        auto params = layers_[li]->params();
        if (params.empty()) continue;
        Rng rng(seed + 0x9e3779b97f4a7c15ULL * (li + 1) + specs_[li].init_seed);
        // fan_in: dense -> input size; conv -> kernel area.
        std::size_t fan_in = specs_[li].kind == LayerKind::dense ? specs_[li].d0
                                                                 : specs_[li].d3 * specs_[li].d3;
        double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Tensor* t : params)
            for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] = rng.uniform(-bound, bound);
    }
}

Tensor Classifier::forward(const Tensor& x) {
    if (x.shape() != input_shape_)
        throw DimensionError("input shape " + x.shape_str() + " does not match model input");
    Tensor v = x;
    for (auto& l : layers_) v = l->forward(v);
    return v;
}

Tensor Classifier::backward(const Tensor& grad_probs) {
    Tensor g = grad_probs;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

void Classifier::zero_grads() {
    for (auto& l : layers_)
        for (Tensor* g : l->grads())
            std::fill(g->flat().begin(), g->flat().end(), 0.0);
}

void Classifier::sgd_step(double lr) {
    for (auto& l : layers_) {
        auto ps = l->params();
        auto gs = l->grads();
        for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t j = 0; j < ps[i]->size(); ++j)
                (*ps[i])[j] -= lr * (*gs[i])[j];
    }
}

std::size_t Classifier::param_count() const {
    std::size_t n = 0;
    for (auto& l : layers_)
        for (Tensor* p : const_cast<Layer&>(*l).params()) n += p->size();
    return n;
}

std::vector<double> Classifier::flat_params() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (auto& l : layers_)
        for (Tensor* p : const_cast<Layer&>(*l).params())
            out.insert(out.end(), p->flat().begin(), p->flat().end());
    return out;
}

void Classifier::set_flat_params(const std::vector<double>& values) {
    if (values.size() != param_count())
        throw std::invalid_argument("flat param size mismatch");
    std::size_t off = 0;
    for (auto& l : layers_)
        for (Tensor* p : l->params()) {
            std::copy(values.begin() + off, values.begin() + off + p->size(),
                      p->flat().begin());
            off += p->size();
        }
}

std::vector<double> Classifier::flat_grads() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (auto& l : layers_)
        for (Tensor* g : const_cast<Layer&>(*l).grads())
            out.insert(out.end(), g->flat().begin(), g->flat().end());
    return out;
}

namespace {

constexpr char kModelMagic[4] = {'A', 'M', 'N', 'N'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("model file truncated");
    return v;
}

}  // namespace

void Classifier::save(std::ostream& out) const {
    out.write(kModelMagic, 4);
    write_pod<std::uint32_t>(out, kModelVersion);
    write_pod<std::uint64_t>(out, num_classes_);
    write_pod<std::uint64_t>(out, specs_.size());
    for (const auto& s : specs_) {
        write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(s.kind));
        write_pod<std::uint64_t>(out, s.d0);
        write_pod<std::uint64_t>(out, s.d1);
        write_pod<std::uint64_t>(out, s.d2);
        write_pod<std::uint64_t>(out, s.d3);
        write_pod<std::uint64_t>(out, s.init_seed);
    }
    auto params = flat_params();
    write_pod<std::uint64_t>(out, params.size());
    out.write(reinterpret_cast<const char*>(params.data()),
              static_cast<std::streamsize>(params.size() * sizeof(double)));
}

void Classifier::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    save(out);
}

Classifier Classifier::load(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
        throw std::runtime_error("bad model magic");
    auto version = read_pod<std::uint32_t>(in);
    if (version != kModelVersion)
        throw std::runtime_error("unsupported model version " + std::to_string(version));
    auto num_classes = read_pod<std::uint64_t>(in);
    auto n_layers = read_pod<std::uint64_t>(in);
    std::vector<LayerSpec> specs(n_layers);
    for (auto& s : specs) {
        s.kind = static_cast<LayerKind>(read_pod<std::uint8_t>(in));
        s.d0 = read_pod<std::uint64_t>(in);
        s.d1 = read_pod<std::uint64_t>(in);
        s.d2 = read_pod<std::uint64_t>(in);
        s.d3 = read_pod<std::uint64_t>(in);
        s.init_seed = read_pod<std::uint64_t>(in);
    }
    Classifier model(std::move(specs), num_classes, 0);
    auto n_params = read_pod<std::uint64_t>(in);
    std::vector<double> params(n_params);
    in.read(reinterpret_cast<char*>(params.data()),
            static_cast<std::streamsize>(n_params * sizeof(double)));
    if (!in) throw std::runtime_error("model file truncated");
    model.set_flat_params(params);
    return model;
}

Classifier Classifier::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    return load(in);
}

}  // namespace amlab
