#include "gasrl/neuralnet.hpp"

#include "gasrl/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

namespace gasrl::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    check_shapes();
}

void Mlp::check_shapes() const {
    if (layers_.empty()) throw ShapeError("Mlp: no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.bias.size() != l.weight.rows()) {
            throw ShapeError("Mlp: layer " + std::to_string(i) + " bias has " + std::to_string(l.bias.size()) +
                             " entries for " + std::to_string(l.weight.rows()) + " outputs");
        }
        if (i > 0 && layers_[i - 1].weight.rows() != l.weight.cols()) {
            throw ShapeError("Mlp: layer " + std::to_string(i) + " expects " + std::to_string(l.weight.cols()) +
                             " inputs but previous layer yields " + std::to_string(layers_[i - 1].weight.rows()));
        }
    }
}

Mlp Mlp::create(std::span<const int> sizes, CounterRng& rng) {
    if (sizes.size() < 2) throw ShapeError("Mlp::create: need at least input and output sizes");
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        const int in = sizes[i];
        const int out = sizes[i + 1];
        if (in <= 0 || out <= 0) throw ShapeError("Mlp::create: layer sizes must be positive");
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        DenseLayer layer{Matrix(out, in), Vector(out)};
        for (Eigen::Index c = 0; c < in; ++c)
            for (Eigen::Index r = 0; r < out; ++r) layer.weight(r, c) = rng.uniform(-bound, bound);
        for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = rng.uniform(-bound, bound);
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

Mlp Mlp::zeros(std::span<const int> sizes) {
    if (sizes.size() < 2) throw ShapeError("Mlp::zeros: need at least input and output sizes");
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        layers.push_back({Matrix::Zero(sizes[i + 1], sizes[i]), Vector::Zero(sizes[i + 1])});
    }
    return Mlp(std::move(layers));
}

Eigen::Index Mlp::input_size() const { return layers_.front().weight.cols(); }
Eigen::Index Mlp::output_size() const { return layers_.back().weight.rows(); }

std::vector<int> Mlp::sizes() const {
    std::vector<int> out{static_cast<int>(input_size())};
    for (const auto& l : layers_) out.push_back(static_cast<int>(l.weight.rows()));
    return out;
}

Matrix Mlp::forward(const Matrix& x) const {
    Tape tape;
    return forward(x, tape);
}

Matrix Mlp::forward(const Matrix& x, Tape& tape) const {
    if (x.rows() != input_size()) {
        throw ShapeError("Mlp::forward: input has " + std::to_string(x.rows()) + " rows, network expects " +
                         std::to_string(input_size()));
    }
    tape.inputs.resize(layers_.size());
    tape.inputs[0] = x;
    Matrix z;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        z.noalias() = l.weight * tape.inputs[i];
        z.colwise() += l.bias;
        if (i + 1 < layers_.size()) {
            tape.inputs[i + 1] = z.cwiseMax(0.0);
        }
    }
    return z;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
    const Matrix in = Eigen::Map<const Matrix>(x.data(), static_cast<Eigen::Index>(x.size()), 1);
    const Matrix out = forward(in);
    return {out.data(), out.data() + out.size()};
}

Matrix Mlp::backward(const Tape& tape, const Matrix& upstream, Gradients* grads) const {
    if (tape.inputs.size() != layers_.size()) throw ShapeError("Mlp::backward: tape does not match network");
    const Eigen::Index batch = tape.inputs[0].cols();
    if (upstream.rows() != output_size() || upstream.cols() != batch) {
        throw ShapeError("Mlp::backward: upstream gradient is " + std::to_string(upstream.rows()) + "x" +
                         std::to_string(upstream.cols()) + ", expected " + std::to_string(output_size()) + "x" +
                         std::to_string(batch));
    }
    if (grads) grads->resize(layers_.size());
    Matrix grad = upstream;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const auto& l = layers_[i];
        if (grads) {
            (*grads)[i].weight.noalias() = grad * tape.inputs[i].transpose();
            (*grads)[i].bias = grad.rowwise().sum();
        }
        Matrix dx;
        dx.noalias() = l.weight.transpose() * grad;
        if (i > 0) {
            // rectified-linear mask of the previous layer
            dx = (tape.inputs[i].array() > 0.0).select(dx, 0.0);
        }
        grad = std::move(dx);
    }
    return grad;
}

Gradients Mlp::zero_gradients() const {
    Gradients g;
    for (const auto& l : layers_) g.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    return g;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

std::vector<double> Mlp::parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
        out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
        out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
    }
    return out;
}

void Mlp::set_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ShapeError("Mlp::set_parameters: wrong parameter count");
    std::size_t k = 0;
    for (auto& l : layers_) {
        std::memcpy(l.weight.data(), flat.data() + k, sizeof(double) * l.weight.size());
        k += static_cast<std::size_t>(l.weight.size());
        std::memcpy(l.bias.data(), flat.data() + k, sizeof(double) * l.bias.size());
        k += static_cast<std::size_t>(l.bias.size());
    }
}

bool Mlp::all_finite() const {
    for (const auto& l : layers_) {
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
}

bool Mlp::operator==(const Mlp& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& a = layers_[i];
        const auto& b = other.layers_[i];
        if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols()) return false;
        if (std::memcmp(a.weight.data(), b.weight.data(), sizeof(double) * a.weight.size()) != 0) return false;
        if (std::memcmp(a.bias.data(), b.bias.data(), sizeof(double) * a.bias.size()) != 0) return false;
    }
    return true;
}

std::vector<double> flatten(const Gradients& grads) {
    std::vector<double> out;
    for (const auto& l : grads) {
        out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
        out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
    }
    return out;
}

Adam::Adam(const Mlp& net, Hyper hyper) : hyper_(hyper), first_(net.zero_gradients()), second_(net.zero_gradients()) {}

void Adam::step(Mlp& net, const Gradients& grads) {
    auto& layers = net.layers();
    if (grads.size() != layers.size() || first_.size() != layers.size()) {
        throw ShapeError("Adam::step: gradients do not match network");
    }
    ++steps_;
    const double c1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(steps_));
    const double step_size = hyper_.learning_rate / c1;
    const double sqrt_c2 = std::sqrt(c2);

    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        if (param.size() != g.size()) throw ShapeError("Adam::step: gradient shape mismatch");
        m = hyper_.beta1 * m + (1.0 - hyper_.beta1) * g;
        v = hyper_.beta2 * v + (1.0 - hyper_.beta2) * g.cwiseProduct(g);
        param.array() -= step_size * m.array() / (v.array().sqrt() / sqrt_c2 + hyper_.epsilon);
    };
    for (std::size_t i = 0; i < layers.size(); ++i) {
        update(layers[i].weight, first_[i].weight, second_[i].weight, grads[i].weight);
        update(layers[i].bias, first_[i].bias, second_[i].bias, grads[i].bias);
    }
}

double ScalarAdam::step(double param, double grad) {
    ++steps;
    first = hyper.beta1 * first + (1.0 - hyper.beta1) * grad;
    second = hyper.beta2 * second + (1.0 - hyper.beta2) * grad * grad;
    const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(steps));
    const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(steps));
    return param - hyper.learning_rate / c1 * first / (std::sqrt(second) / std::sqrt(c2) + hyper.epsilon);
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("soft_update: tau must lie in [0, 1]");
    auto& t = target.layers();
    const auto& o = online.layers();
    if (t.size() != o.size()) throw ShapeError("soft_update: layer count mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i].weight.rows() != o[i].weight.rows() || t[i].weight.cols() != o[i].weight.cols() ||
            t[i].bias.size() != o[i].bias.size()) {
            throw ShapeError("soft_update: layer " + std::to_string(i) + " shape mismatch");
        }
        t[i].weight = (1.0 - tau) * t[i].weight + tau * o[i].weight;
        t[i].bias = (1.0 - tau) * t[i].bias + tau * o[i].bias;
    }
}

nlohmann::json encode_doubles(std::span<const double> values) {
    std::vector<std::uint8_t> bytes(values.size() * sizeof(double));
    if (!values.empty()) std::memcpy(bytes.data(), values.data(), bytes.size());
    return nlohmann::json::binary(std::move(bytes));
}

std::vector<double> decode_doubles(const nlohmann::json& j) {
    if (!j.is_binary()) throw FormatError("expected a binary array of doubles");
    const auto& bytes = j.get_binary();
    if (bytes.size() % sizeof(double) != 0) throw FormatError("binary double array has a ragged length");
    std::vector<double> out(bytes.size() / sizeof(double));
    if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

namespace {

nlohmann::json layers_to_json(const std::vector<DenseLayer>& layers) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : layers) {
        arr.push_back({{"rows", l.weight.rows()},
                       {"cols", l.weight.cols()},
                       {"weight", encode_doubles({l.weight.data(), static_cast<std::size_t>(l.weight.size())})},
                       {"bias", encode_doubles({l.bias.data(), static_cast<std::size_t>(l.bias.size())})}});
    }
    return arr;
}

std::vector<DenseLayer> layers_from_json(const nlohmann::json& arr) {
    std::vector<DenseLayer> layers;
    for (const auto& item : arr) {
        const auto rows = item.at("rows").get<Eigen::Index>();
        const auto cols = item.at("cols").get<Eigen::Index>();
        const auto w = decode_doubles(item.at("weight"));
        const auto b = decode_doubles(item.at("bias"));
        if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows) {
            throw FormatError("layer blob sizes do not match declared shape");
        }
        layers.push_back({Eigen::Map<const Matrix>(w.data(), rows, cols), Eigen::Map<const Vector>(b.data(), rows)});
    }
    return layers;
}

}  // namespace

nlohmann::json to_json(const Mlp& net) {
    return {{"activation", "relu"}, {"layers", layers_to_json(net.layers())}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
    try {
        if (j.at("activation") != "relu") throw FormatError("unsupported activation");
        return Mlp(layers_from_json(j.at("layers")));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed network document: ") + e.what());
    } catch (const ShapeError& e) {
        throw FormatError(std::string("malformed network document: ") + e.what());
    }
}

nlohmann::json Adam::to_json() const {
    return {{"learning_rate", hyper_.learning_rate}, {"beta1", hyper_.beta1}, {"beta2", hyper_.beta2},
            {"epsilon", hyper_.epsilon},             {"steps", steps_},       {"first", layers_to_json(first_)},
            {"second", layers_to_json(second_)}};
}

Adam Adam::from_json(const nlohmann::json& j) {
    try {
        Adam a;
        a.hyper_ = {j.at("learning_rate").get<double>(), j.at("beta1").get<double>(), j.at("beta2").get<double>(),
                    j.at("epsilon").get<double>()};
        a.steps_ = j.at("steps").get<long>();
        a.first_ = layers_from_json(j.at("first"));
        a.second_ = layers_from_json(j.at("second"));
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed optimizer document: ") + e.what());
    }
}

bool Adam::operator==(const Adam& other) const {
    return hyper_ == other.hyper_ && steps_ == other.steps_ && Mlp(first_) == Mlp(other.first_) &&
           Mlp(second_) == Mlp(other.second_);
}

}  // namespace gasrl::nn
