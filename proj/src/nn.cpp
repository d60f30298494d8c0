#include "snav/nn.hpp"

#include <cmath>

#include "snav/error.hpp"

namespace snav::inline SNAV_REAL_NS {

int ParamBuilder::get(const std::string& name, int rows, int cols, Init init, double scale) {
  ++requested_;
  if (binding()) {
    const int id = params_->index(name);
    const Mat& v = (*params_)[id].value;
    if (v.rows() != rows || v.cols() != cols)
      throw ShapeError("parameter '" + name + "' has shape " + shape_str(v) + ", expected " + std::to_string(rows) +
                       "x" + std::to_string(cols));
    return id;
  }
  Mat m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    switch (init) {
      case Init::Zero: m.data()[k] = 0; break;
      case Init::Uniform: m.data()[k] = static_cast<real>(rng_->uniform(-scale, scale)); break;
      case Init::Normal: m.data()[k] = static_cast<real>(scale * rng_->normal()); break;
    }
  }
  return params_->add(name, std::move(m));
}

Linear Linear::create(ParamBuilder& pb, const std::string& name, int in, int out, bool zero) {
  Linear l;
  l.in = in;
  l.out = out;
  if (zero)
    l.w = pb.get(name + ".w", in, out, ParamBuilder::Init::Zero);
  else
    l.w = pb.get(name + ".w", in, out, ParamBuilder::Init::Uniform, 1.0 / std::sqrt(static_cast<double>(in)));
  l.b = pb.get(name + ".b", 1, out, ParamBuilder::Init::Zero);
  return l;
}

Value Linear::operator()(Tape& t, const ParamSet& ps, Value x) const {
  return add_row(matmul(x, t.param(ps, w)), t.param(ps, b));
}

LstmCell LstmCell::create(ParamBuilder& pb, const std::string& name, int in, int hidden) {
  LstmCell c;
  c.in = in;
  c.hidden = hidden;
  c.w = pb.get(name + ".w", in + hidden, 4 * hidden, ParamBuilder::Init::Uniform,
               1.0 / std::sqrt(static_cast<double>(in + hidden)));
  c.b = pb.get(name + ".b", 1, 4 * hidden, ParamBuilder::Init::Zero);
  if (!pb.binding()) pb.params()[c.b].value.middleCols(hidden, hidden).setOnes();
  return c;
}

LstmState LstmCell::zero_state(Tape& t) const {
  return {t.constant(Mat::Zero(1, hidden)), t.constant(Mat::Zero(1, hidden))};
}

LstmState LstmCell::operator()(Tape& t, const ParamSet& ps, Value x, const LstmState& s) const {
  const Value z = add_row(matmul(concat_cols({x, s.h}), t.param(ps, w)), t.param(ps, b));
  const Value i = sigmoid(slice_cols(z, 0, hidden));
  const Value f = sigmoid(slice_cols(z, hidden, hidden));
  const Value g = tanh(slice_cols(z, 2 * hidden, hidden));
  const Value o = sigmoid(slice_cols(z, 3 * hidden, hidden));
  const Value c = add(mul(f, s.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

Embedding Embedding::create(ParamBuilder& pb, const std::string& name, int vocab, int dim) {
  Embedding e;
  e.vocab = vocab;
  e.dim = dim;
  e.table = pb.get(name + ".table", vocab, dim, ParamBuilder::Init::Normal, 1.0);
  return e;
}

Value Embedding::operator()(Tape& t, const ParamSet& ps, const std::vector<int>& ids) const {
  return gather_rows(t.param(ps, table), ids);
}

Mlp Mlp::create(ParamBuilder& pb, const std::string& name, int in, const std::vector<int>& widths) {
  if (widths.empty()) throw ConfigurationError("an MLP needs at least one layer");
  Mlp m;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    m.layers.push_back(Linear::create(pb, name + "." + std::to_string(k), in, widths[k]));
    in = widths[k];
  }
  return m;
}

Value Mlp::operator()(Tape& t, const ParamSet& ps, Value x) const {
  for (const Linear& l : layers) x = relu(l(t, ps, x));
  return x;
}

Adam::Adam(const ParamSet& params, AdamConfig cfg) : cfg_(cfg) {
  for (const Parameter& p : params.all()) {
    m_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
  }
}

void Adam::step(ParamSet& params, GradSet& grads) {
  if (grads.size() != m_.size() || params.size() != m_.size())
    throw ShapeError("optimizer state does not match the parameter set");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[static_cast<int>(i)].allFinite())
      throw DivergenceError("non-finite gradient in parameter '" + params[static_cast<int>(i)].name + "' at step " +
                            std::to_string(t_ + 1));
  }
  ++t_;
  const real b1 = static_cast<real>(cfg_.beta1);
  const real b2 = static_cast<real>(cfg_.beta2);
  const real c1 = static_cast<real>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
  const real c2 = static_cast<real>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
  const real lr = static_cast<real>(cfg_.lr);
  const real eps = static_cast<real>(cfg_.eps);
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const int id = static_cast<int>(i);
    Mat& g = grads[id];
    m_[i] = b1 * m_[i] + (1 - b1) * g;
    v_[i] = b2 * v_[i] + (1 - b2) * g.cwiseProduct(g);
    params[id].value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
    g.setZero();
  }
}

}  // namespace snav::inline SNAV_REAL_NS
