#include "snav/autodiff.hpp"

#include <cmath>
#include <cstring>

#include "snav/error.hpp"
#include "snav/rng.hpp"

namespace snav::inline SNAV_REAL_NS {

std::string shape_str(const Mat& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

int ParamSet::add(std::string name, Mat init) {
  if (index_.count(name)) throw ConfigurationError("duplicate parameter name '" + name + "'");
  const int id = static_cast<int>(params_.size());
  index_.emplace(name, id);
  params_.push_back({std::move(name), std::move(init)});
  return id;
}

int ParamSet::index(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw LookupError("no parameter named '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Parameter& x = a.params_[i];
    const Parameter& y = b.params_[i];
    if (x.name != y.name || x.value.rows() != y.value.rows() || x.value.cols() != y.value.cols()) return false;
    for (Eigen::Index k = 0; k < x.value.size(); ++k) {
      // Bitwise: NaN payloads and signed zeros count.
      if (std::memcmp(x.value.data() + k, y.value.data() + k, sizeof(real)) != 0) return false;
    }
  }
  return true;
}

GradSet::GradSet(const ParamSet& params) {
  grads_.reserve(params.size());
  for (const Parameter& p : params.all()) grads_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
}

void GradSet::zero() {
  for (Mat& g : grads_) g.setZero();
}

void GradSet::add(const GradSet& other) {
  if (other.size() != size()) throw ShapeError("gradient sets differ in size");
  for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += other.grads_[i];
}

void GradSet::scale(real s) {
  for (Mat& g : grads_) g *= s;
}

bool GradSet::finite() const {
  for (const Mat& g : grads_)
    if (!g.allFinite()) return false;
  return true;
}

real GradSet::squared_norm() const {
  real s = 0;
  for (const Mat& g : grads_) s += g.squaredNorm();
  return s;
}

const Mat& Value::data() const { return tape->node(id).data(); }

Mat Value::grad() const {
  const Tape::Node& n = tape->node(id);
  if (n.has_grad) return n.grad;
  return Mat::Zero(n.data().rows(), n.data().cols());
}

real Value::item() const {
  const Mat& m = data();
  if (m.rows() != 1 || m.cols() != 1) throw ShapeError("item() needs a 1x1 value, got " + shape_str(m));
  return m(0, 0);
}

Value Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Value{this, static_cast<int>(nodes_.size()) - 1};
}

Value Tape::constant(Mat m) {
  Node n;
  n.val = std::move(m);
  return push(std::move(n));
}

Value Tape::scalar(real s) { return constant(Mat::Constant(1, 1, s)); }

Value Tape::row(const std::vector<float>& v) {
  Mat m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = static_cast<real>(v[i]);
  return constant(std::move(m));
}

Value Tape::param(const ParamSet& params, int index) {
  if (params_ && params_ != &params) throw ConfigurationError("a tape can only reference one parameter set");
  params_ = &params;
  if (param_nodes_.size() < params.size()) param_nodes_.resize(params.size(), -1);
  int& slot = param_nodes_.at(static_cast<std::size_t>(index));
  if (slot >= 0) return Value{this, slot};
  Node n;
  n.op = Op::Param;
  n.ext = &params[index].value;
  n.param = index;
  n.needs_grad = true;
  slot = push(std::move(n)).id;
  return Value{this, slot};
}

void Tape::clear() {
  nodes_.clear();
  params_ = nullptr;
  param_nodes_.clear();
}

Mat& Tape::grad_of(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.has_grad) {
    n.grad = Mat::Zero(n.data().rows(), n.data().cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Value loss) {
  if (loss.tape != this) throw ConfigurationError("backward on a value from another tape");
  if (loss.rows() != 1 || loss.cols() != 1) throw ShapeError("backward needs a 1x1 loss, got " + shape_str(loss.data()));
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  grad_of(loss.id)(0, 0) = 1;
  for (int id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.has_grad && n.needs_grad) backward_node(id);
  }
}

void Tape::accumulate(GradSet& grads) const {
  for (const Node& n : nodes_)
    if (n.op == Op::Param && n.has_grad) grads[n.param] += n.grad;
}

std::uint64_t Tape::relu_signature() const {
  std::uint64_t h = 0x1234;
  for (const Node& n : nodes_) {
    if (n.op != Op::Relu) continue;
    const Mat& x = nodes_[static_cast<std::size_t>(n.a)].data();
    for (Eigen::Index k = 0; k < x.size(); ++k) h = hash_combine(h, x.data()[k] > 0 ? 1u : 0u);
  }
  return h;
}

namespace {

bool wants(const Tape& t, int id) { return id >= 0 && t.node(id).needs_grad; }

}  // namespace

void Tape::backward_node(int id) {
  // No nodes are added during backward, so references into nodes_ stay valid.
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  const Mat& g = n.grad;
  const Mat& y = n.data();
  auto in = [&](int k) -> const Mat& { return nodes_[static_cast<std::size_t>(k)].data(); };
  const bool ga = wants(*this, n.a);
  const bool gb = wants(*this, n.b);

  switch (n.op) {
    case Op::Constant:
    case Op::Param:
    case Op::Detach:
      break;
    case Op::MatMul:
      if (ga) grad_of(n.a).noalias() += g * in(n.b).transpose();
      if (gb) grad_of(n.b).noalias() += in(n.a).transpose() * g;
      break;
    case Op::Add:
      if (ga) grad_of(n.a) += g;
      if (gb) grad_of(n.b) += g;
      break;
    case Op::Sub:
      if (ga) grad_of(n.a) += g;
      if (gb) grad_of(n.b) -= g;
      break;
    case Op::Mul:
      if (ga) grad_of(n.a).array() += g.array() * in(n.b).array();
      if (gb) grad_of(n.b).array() += g.array() * in(n.a).array();
      break;
    case Op::AddRow:
      if (ga) grad_of(n.a) += g;
      if (gb) grad_of(n.b) += g.colwise().sum();
      break;
    case Op::SubRow:
      if (ga) grad_of(n.a) += g;
      if (gb) grad_of(n.b) -= g.colwise().sum();
      break;
    case Op::Scale:
      if (ga) grad_of(n.a) += n.s * g;
      break;
    case Op::AddScalar:
      if (ga) grad_of(n.a) += g;
      break;
    case Op::Tanh:
      if (ga) grad_of(n.a).array() += g.array() * (1 - y.array().square());
      break;
    case Op::Sigmoid:
      if (ga) grad_of(n.a).array() += g.array() * y.array() * (1 - y.array());
      break;
    case Op::Relu:
      if (ga) grad_of(n.a).array() += (in(n.a).array() > 0).select(g.array(), real(0));
      break;
    case Op::Exp:
      if (ga) grad_of(n.a).array() += g.array() * y.array();
      break;
    case Op::Log:
      if (ga) grad_of(n.a).array() += g.array() / in(n.a).array();
      break;
    case Op::Square:
      if (ga) grad_of(n.a).array() += 2 * g.array() * in(n.a).array();
      break;
    case Op::Softmax:
      if (ga) {
        const Eigen::Matrix<real, Eigen::Dynamic, 1> dots = (g.array() * y.array()).rowwise().sum();
        grad_of(n.a).array() += y.array() * (g.colwise() - dots).array();
      }
      break;
    case Op::LogSoftmax:
      if (ga) {
        const Eigen::Matrix<real, Eigen::Dynamic, 1> gs = g.rowwise().sum();
        const Mat p = y.array().exp().matrix();
        grad_of(n.a) += g - (p.array().colwise() * gs.array()).matrix();
      }
      break;
    case Op::ConcatCols: {
      Eigen::Index off = 0;
      for (int k : n.ins) {
        const Eigen::Index w = in(k).cols();
        if (wants(*this, k)) grad_of(k) += g.middleCols(off, w);
        off += w;
      }
      break;
    }
    case Op::ConcatRows: {
      Eigen::Index off = 0;
      for (int k : n.ins) {
        const Eigen::Index h = in(k).rows();
        if (wants(*this, k)) grad_of(k) += g.middleRows(off, h);
        off += h;
      }
      break;
    }
    case Op::SliceCols:
      if (ga) grad_of(n.a).middleCols(n.i0, n.i1) += g;
      break;
    case Op::SliceRows:
      if (ga) grad_of(n.a).middleRows(n.i0, n.i1) += g;
      break;
    case Op::GatherRows:
      if (ga) {
        Mat& t = grad_of(n.a);
        for (std::size_t r = 0; r < n.ins.size(); ++r) t.row(n.ins[r]) += g.row(static_cast<Eigen::Index>(r));
      }
      break;
    case Op::Pick:
      if (ga) grad_of(n.a)(n.i0, n.i1) += g(0, 0);
      break;
    case Op::Sum:
      if (ga) grad_of(n.a).array() += g(0, 0);
      break;
    case Op::Mean:
      if (ga) grad_of(n.a).array() += g(0, 0) / static_cast<real>(in(n.a).size());
      break;
    case Op::SumOverRows:
      if (ga) grad_of(n.a).rowwise() += g.row(0);
      break;
    case Op::SumOverCols:
      if (ga) grad_of(n.a).colwise() += g.col(0);
      break;
    case Op::Transpose:
      if (ga) grad_of(n.a) += g.transpose();
      break;
  }
}

namespace {

Tape& tape_of(Value a) {
  if (!a.valid()) throw ConfigurationError("operation on an empty value");
  return *a.tape;
}

Tape& tape_of(Value a, Value b) {
  if (!a.valid() || !b.valid()) throw ConfigurationError("operation on an empty value");
  if (a.tape != b.tape) throw ConfigurationError("operands live on different tapes");
  return *a.tape;
}

Tape::Node unary(Op op, Value a, Mat val) {
  Tape::Node n;
  n.op = op;
  n.a = a.id;
  n.val = std::move(val);
  n.needs_grad = a.tape->node(a.id).needs_grad;
  return n;
}

Tape::Node binary(Op op, Value a, Value b, Mat val) {
  Tape::Node n;
  n.op = op;
  n.a = a.id;
  n.b = b.id;
  n.val = std::move(val);
  n.needs_grad = a.tape->node(a.id).needs_grad || a.tape->node(b.id).needs_grad;
  return n;
}

void same_shape(const char* what, Value a, Value b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(what) + ": shapes " + shape_str(a.data()) + " and " + shape_str(b.data()) +
                     " differ");
}

void row_shape(const char* what, Value a, Value r) {
  if (r.rows() != 1 || r.cols() != a.cols())
    throw ShapeError(std::string(what) + ": row " + shape_str(r.data()) + " does not broadcast over " +
                     shape_str(a.data()));
}

}  // namespace

Value matmul(Value a, Value b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows())
    throw ShapeError("matmul: shapes " + shape_str(a.data()) + " and " + shape_str(b.data()) + " are incompatible");
  Mat v;
  v.noalias() = a.data() * b.data();
  return t.push(binary(Op::MatMul, a, b, std::move(v)));
}

Value add(Value a, Value b) {
  Tape& t = tape_of(a, b);
  same_shape("add", a, b);
  return t.push(binary(Op::Add, a, b, a.data() + b.data()));
}

Value sub(Value a, Value b) {
  Tape& t = tape_of(a, b);
  same_shape("sub", a, b);
  return t.push(binary(Op::Sub, a, b, a.data() - b.data()));
}

Value mul(Value a, Value b) {
  Tape& t = tape_of(a, b);
  same_shape("mul", a, b);
  return t.push(binary(Op::Mul, a, b, a.data().cwiseProduct(b.data())));
}

Value add_row(Value a, Value r) {
  Tape& t = tape_of(a, r);
  row_shape("add_row", a, r);
  Mat v = a.data();
  v.rowwise() += r.data().row(0);
  return t.push(binary(Op::AddRow, a, r, std::move(v)));
}

Value sub_row(Value a, Value r) {
  Tape& t = tape_of(a, r);
  row_shape("sub_row", a, r);
  Mat v = a.data();
  v.rowwise() -= r.data().row(0);
  return t.push(binary(Op::SubRow, a, r, std::move(v)));
}

Value scale(Value a, real s) {
  Tape& t = tape_of(a);
  Tape::Node n = unary(Op::Scale, a, s * a.data());
  n.s = s;
  return t.push(std::move(n));
}

Value add_scalar(Value a, real s) {
  Tape& t = tape_of(a);
  Tape::Node n = unary(Op::AddScalar, a, (a.data().array() + s).matrix());
  n.s = s;
  return t.push(std::move(n));
}

Value tanh(Value a) {
  Tape& t = tape_of(a);
  return t.push(unary(Op::Tanh, a, a.data().array().tanh().matrix()));
}

Value sigmoid(Value a) {
  Tape& t = tape_of(a);
  return t.push(unary(Op::Sigmoid, a, (1 / (1 + (-a.data().array()).exp())).matrix()));
}

Value relu(Value a) {
  Tape& t = tape_of(a);
  return t.push(unary(Op::Relu, a, a.data().cwiseMax(real(0))));
}

Value exp(Value a) {
  Tape& t = tape_of(a);
  return t.push(unary(Op::Exp, a, a.data().array().exp().matrix()));
}

Value log(Value a) {
  Tape& t = tape_of(a);
  return t.push(unary(Op::Log, a, a.data().array().log().matrix()));
}

Value square(Value a) {
  Tape& t = tape_of(a);
  return t.push(unary(Op::Square, a, a.data().array().square().matrix()));
}

Value softmax(Value a) {
  Tape& t = tape_of(a);
  Mat v = a.data();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    v.row(r).array() -= v.row(r).maxCoeff();
    v.row(r) = v.row(r).array().exp().matrix();
    v.row(r) /= v.row(r).sum();
  }
  return t.push(unary(Op::Softmax, a, std::move(v)));
}

Value log_softmax(Value a) {
  Tape& t = tape_of(a);
  Mat v = a.data();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    const real m = v.row(r).maxCoeff();
    const real lse = m + std::log((v.row(r).array() - m).exp().sum());
    v.row(r).array() -= lse;
  }
  return t.push(unary(Op::LogSoftmax, a, std::move(v)));
}

Value concat_cols(const std::vector<Value>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape& t = tape_of(parts[0]);
  Eigen::Index width = 0;
  for (Value p : parts) {
    tape_of(parts[0], p);
    if (p.rows() != parts[0].rows())
      throw ShapeError("concat_cols: shapes " + shape_str(parts[0].data()) + " and " + shape_str(p.data()) +
                       " have different row counts");
    width += p.cols();
  }
  Tape::Node n;
  n.op = Op::ConcatCols;
  n.val.resize(parts[0].rows(), width);
  Eigen::Index off = 0;
  for (Value p : parts) {
    n.val.middleCols(off, p.cols()) = p.data();
    off += p.cols();
    n.ins.push_back(p.id);
    n.needs_grad = n.needs_grad || t.node(p.id).needs_grad;
  }
  return t.push(std::move(n));
}

Value concat_rows(const std::vector<Value>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Tape& t = tape_of(parts[0]);
  Eigen::Index height = 0;
  for (Value p : parts) {
    tape_of(parts[0], p);
    if (p.cols() != parts[0].cols())
      throw ShapeError("concat_rows: shapes " + shape_str(parts[0].data()) + " and " + shape_str(p.data()) +
                       " have different column counts");
    height += p.rows();
  }
  Tape::Node n;
  n.op = Op::ConcatRows;
  n.val.resize(height, parts[0].cols());
  Eigen::Index off = 0;
  for (Value p : parts) {
    n.val.middleRows(off, p.rows()) = p.data();
    off += p.rows();
    n.ins.push_back(p.id);
    n.needs_grad = n.needs_grad || t.node(p.id).needs_grad;
  }
  return t.push(std::move(n));
}

Value slice_cols(Value a, int start, int count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.cols())
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) + ") out of " +
                     shape_str(a.data()));
  Tape::Node n = unary(Op::SliceCols, a, a.data().middleCols(start, count));
  n.i0 = start;
  n.i1 = count;
  return t.push(std::move(n));
}

Value slice_rows(Value a, int start, int count) {
  Tape& t = tape_of(a);
  if (start < 0 || count < 0 || start + count > a.rows())
    throw ShapeError("slice_rows: [" + std::to_string(start) + ", +" + std::to_string(count) + ") out of " +
                     shape_str(a.data()));
  Tape::Node n = unary(Op::SliceRows, a, a.data().middleRows(start, count));
  n.i0 = start;
  n.i1 = count;
  return t.push(std::move(n));
}

Value gather_rows(Value table, const std::vector<int>& rows) {
  Tape& t = tape_of(table);
  Mat v(static_cast<Eigen::Index>(rows.size()), table.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= table.rows())
      throw ShapeError("gather_rows: row " + std::to_string(rows[r]) + " out of " + shape_str(table.data()));
    v.row(static_cast<Eigen::Index>(r)) = table.data().row(rows[r]);
  }
  Tape::Node n = unary(Op::GatherRows, table, std::move(v));
  n.ins = rows;
  return t.push(std::move(n));
}

Value pick(Value a, int r, int c) {
  Tape& t = tape_of(a);
  if (r < 0 || c < 0 || r >= a.rows() || c >= a.cols())
    throw ShapeError("pick: (" + std::to_string(r) + ", " + std::to_string(c) + ") out of " + shape_str(a.data()));
  Tape::Node n = unary(Op::Pick, a, Mat::Constant(1, 1, a.data()(r, c)));
  n.i0 = r;
  n.i1 = c;
  return t.push(std::move(n));
}

Value sum(Value a) {
  Tape& t = tape_of(a);
  return t.push(unary(Op::Sum, a, Mat::Constant(1, 1, a.data().sum())));
}

Value mean(Value a) {
  Tape& t = tape_of(a);
  if (a.data().size() == 0) throw ShapeError("mean of an empty value");
  return t.push(unary(Op::Mean, a, Mat::Constant(1, 1, a.data().mean())));
}

Value sum_over_rows(Value a) {
  Tape& t = tape_of(a);
  return t.push(unary(Op::SumOverRows, a, a.data().colwise().sum()));
}

Value sum_over_cols(Value a) {
  Tape& t = tape_of(a);
  return t.push(unary(Op::SumOverCols, a, a.data().rowwise().sum()));
}

Value transpose(Value a) {
  Tape& t = tape_of(a);
  return t.push(unary(Op::Transpose, a, a.data().transpose()));
}

Value detach(Value a) {
  Tape& t = tape_of(a);
  Tape::Node n = unary(Op::Detach, a, a.data());
  n.needs_grad = false;
  return t.push(std::move(n));
}

}  // namespace snav::inline SNAV_REAL_NS
