#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "snav/real.hpp"

namespace snav::inline SNAV_REAL_NS {

// Every value is a 2-D matrix; row vectors (1 x n) are the common case.
using Mat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic>;

std::string shape_str(const Mat& m);

struct Parameter {
  std::string name;
  Mat value;
};

// Named parameters. Indices are stable and follow insertion order.
class ParamSet {
 public:
  int add(std::string name, Mat init);  // throws ConfigurationError on duplicates
  int index(std::string_view name) const;  // throws LookupError
  bool contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

  Parameter& operator[](int i) { return params_.at(static_cast<std::size_t>(i)); }
  const Parameter& operator[](int i) const { return params_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  const std::vector<Parameter>& all() const { return params_; }

  // Same names, shapes and bit-identical values.
  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, int> index_;
};

// Gradient buffers shaped like a ParamSet.
class GradSet {
 public:
  GradSet() = default;
  explicit GradSet(const ParamSet& params);

  Mat& operator[](int i) { return grads_.at(static_cast<std::size_t>(i)); }
  const Mat& operator[](int i) const { return grads_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return grads_.size(); }

  void zero();
  void add(const GradSet& other);
  void scale(real s);
  bool finite() const;
  real squared_norm() const;

 private:
  std::vector<Mat> grads_;
};

class Tape;

// Handle to a node on a tape.
struct Value {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr; }
  const Mat& data() const;
  // Gradient after Tape::backward; a zero matrix when nothing flowed here.
  Mat grad() const;
  Eigen::Index rows() const { return data().rows(); }
  Eigen::Index cols() const { return data().cols(); }
  real item() const;  // requires a 1 x 1 value
};

enum class Op : std::uint8_t {
  Constant, Param, MatMul, Add, Sub, Mul, AddRow, SubRow, Scale, AddScalar,
  Tanh, Sigmoid, Relu, Exp, Log, Square, Softmax, LogSoftmax,
  ConcatCols, ConcatRows, SliceCols, SliceRows, GatherRows, Pick,
  Sum, Mean, SumOverRows, SumOverCols, Transpose, Detach
};

// Records a computation for reverse-mode differentiation. Nodes are appended
// in evaluation order, so index order is a valid topological order. A tape is
// used from one thread at a time.
class Tape {
 public:
  struct Node {
    Op op = Op::Constant;
    int a = -1;
    int b = -1;
    std::vector<int> ins;  // concat inputs, gather indices
    int i0 = 0;
    int i1 = 0;
    real s = 0;
    Mat val;
    Mat grad;
    const Mat* ext = nullptr;  // parameter storage, not copied
    int param = -1;
    bool needs_grad = false;
    bool has_grad = false;

    const Mat& data() const { return ext ? *ext : val; }
  };

  Value constant(Mat m);
  Value scalar(real s);
  Value row(const std::vector<float>& v);
  // Leaf for parameter `index`; one node per parameter per tape.
  Value param(const ParamSet& params, int index);

  // Seeds d loss / d loss = 1 and propagates. `loss` must be 1 x 1.
  void backward(Value loss);
  // Adds gradients of parameter leaves into `grads`.
  void accumulate(GradSet& grads) const;

  void clear();
  std::size_t size() const { return nodes_.size(); }

  // Hash of the sign pattern of every relu input; finite-difference checks
  // use it to skip perturbations that cross a kink.
  std::uint64_t relu_signature() const;

  Value push(Node n);
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

 private:
  Mat& grad_of(int id);
  void backward_node(int id);

  std::vector<Node> nodes_;
  const ParamSet* params_ = nullptr;
  std::vector<int> param_nodes_;
};

Value matmul(Value a, Value b);
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value add_row(Value a, Value row);  // row broadcast over the rows of a
Value sub_row(Value a, Value row);
Value scale(Value a, real s);
Value add_scalar(Value a, real s);
Value tanh(Value a);
Value sigmoid(Value a);
Value relu(Value a);
Value exp(Value a);
Value log(Value a);
Value square(Value a);
Value softmax(Value a);  // row-wise
Value log_softmax(Value a);
Value concat_cols(const std::vector<Value>& parts);
Value concat_rows(const std::vector<Value>& parts);
Value slice_cols(Value a, int start, int count);
Value slice_rows(Value a, int start, int count);
Value gather_rows(Value table, const std::vector<int>& rows);
Value pick(Value a, int r, int c);
Value sum(Value a);
Value mean(Value a);
Value sum_over_rows(Value a);  // n x m -> 1 x m
Value sum_over_cols(Value a);  // n x m -> n x 1
Value transpose(Value a);
Value detach(Value a);

inline Value operator+(Value a, Value b) { return add(a, b); }
inline Value operator-(Value a, Value b) { return sub(a, b); }
inline Value operator*(Value a, Value b) { return mul(a, b); }

}  // namespace snav::inline SNAV_REAL_NS
