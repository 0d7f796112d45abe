#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "divs/stream.hpp"
#include "divs/tensor.hpp"

namespace divs {

// --- small dense matrix -----------------------------------------------------

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

// y = M x, accumulation in ascending column order per row.
std::vector<double> matvec(const Matrix& m, std::span<const double> x);

// --- activations -------------------------------------------------------------

enum class Activation { Identity, Sigmoid, Relu };

double sigmoid(double z);
double apply_activation(Activation f, double z);
// Derivative expressed through the activation output a = f(z).
double activation_derivative(Activation f, double a);
Activation activation_from_string(const std::string& name);
std::string to_string(Activation f);

// --- convolution -------------------------------------------------------------

struct ConvSpec {
    Tensor3 filter;
    int padding = 0;
    int stride = 1;
};

// Output shape for a depthwise convolution: depth passes through, spatial
// dims are (X - F + 2P)/S + 1. Throws on depth mismatch, a filter larger
// than the padded input, or a non-integral output dimension.
TensorShape conv_output_shape(const TensorShape& x, const TensorShape& f, int padding,
                              int stride);

// Convolution area of output element (i, j) in padded coordinates,
// end-exclusive rows [r_s, r_e) and columns [c_s, c_e).
struct ConvRegion {
    int r_s = 0;
    int r_e = 0;
    int c_s = 0;
    int c_e = 0;
};
ConvRegion conv_area(int i, int j, int stride, const TensorShape& f);

// One parallel task per output element, as the task count D_a*H_a*W_a
// prescribes; region bounds repeat across depth slices.
struct ConvPlan {
    TensorShape output;
    std::size_t task_count = 0;
    std::vector<ConvRegion> regions;  // one per task, task-index order
};
ConvPlan build_conv_plan(const TensorShape& x, const TensorShape& f, int padding, int stride);

// Depthwise convolution. Each task writes exactly one output element and
// accumulates its region in row-major order, so the result is bit-identical
// for every worker count.
Tensor3 conv_forward(const Tensor3& x, const ConvSpec& spec, int workers = 1);

// --- pooling ------------------------------------------------------------------

// Pooled shape; throws when a pooled dimension is not integral.
TensorShape pool_output_shape(const TensorShape& a, int window, int stride);

// Max pooling per depth slice. Pooled dimensions must be integral.
Tensor3 pool_forward(const Tensor3& a, int window = 2, int stride = 2);

// --- fully-connected ----------------------------------------------------------

// Single neuron: f(sum_j w_j * x_j + bias), fixed index order.
double fc_neuron(std::span<const double> inputs, std::span<const double> weights, double bias,
                 Activation activation);

struct FcLayer {
    Matrix weights;  // out_size x in_size
    double bias = 0.0;  // one shared bias value per layer
    Activation activation = Activation::Identity;

    int in_size() const { return weights.cols; }
    int out_size() const { return weights.rows; }
};

// Per-neuron tasks with disjoint writes; bitwise equal to sequential
// evaluation for any worker count.
std::vector<double> fc_layer_forward(const FcLayer& layer, std::span<const double> inputs,
                                     int workers = 1);

// Maximum parallelism degree: the widest layer in the network.
int fc_max_parallelism(const std::vector<int>& layer_sizes);

using FcStack = std::vector<FcLayer>;

std::vector<double> fc_stack_forward(const FcStack& stack, std::span<const double> input,
                                     int workers = 1);

// Squared-error loss 0.5 * sum((out - target)^2) of the stack on one sample.
double fc_loss(const FcStack& stack, std::span<const double> input,
               std::span<const double> target);

struct FcGradients {
    std::vector<Matrix> weight_grads;  // one per layer
    std::vector<double> bias_grads;    // shared-bias gradient per layer
    double loss = 0.0;
};

// Analytic gradients of fc_loss by backpropagation.
FcGradients fc_gradients(const FcStack& stack, std::span<const double> input,
                         std::span<const double> target);

// One SGD step on the stack; returns the pre-update loss.
double fc_backprop_step(FcStack& stack, std::span<const double> input,
                        std::span<const double> target, double learning_rate);

// Parameter flattening for synchronization. Order: per layer, weights in
// row-major order, then the shared bias.
std::size_t fc_stack_param_count(const FcStack& stack);
std::vector<std::string> fc_stack_param_names(const FcStack& stack, const std::string& prefix);
std::vector<double> fc_stack_get_params(const FcStack& stack);
void fc_stack_set_params(FcStack& stack, std::span<const double> params);

// --- LSTM ----------------------------------------------------------------------

struct LstmParams {
    int input_size = 0;
    int hidden_size = 0;
    Matrix w_i, w_f, w_c;  // hidden x (input + hidden), act on [x_t, h_prev]
    Matrix w_xo;           // hidden x input
    Matrix w_ho;           // hidden x hidden
    std::vector<double> b_i, b_f, b_c;
    // The output gate carries no bias by default; flag enables one.
    bool output_gate_bias = false;
    std::vector<double> b_o;
};

struct LstmGates {
    std::vector<double> input, forget, output, candidate;
};

struct LstmStep {
    std::vector<double> h, c;
    LstmGates gates;
};

// i = sig(W_i [x,h] + b_i), f = sig(W_f [x,h] + b_f),
// o = sig(W_xo x + W_ho h [+ b_o]), c~ = tanh(W_C [x,h] + b_C),
// C = f.C_prev + i.c~, h = o.tanh(C).
LstmStep lstm_cell(std::span<const double> x, std::span<const double> h_prev,
                   std::span<const double> c_prev, const LstmParams& p);

struct LstmModel {
    LstmParams params;
    FcLayer output;  // on h_T; identity activation for prediction outputs
};

// Folds lstm_cell over the sequence from zero state, then the output layer.
std::vector<double> lstm_forward(const LstmModel& model,
                                 const std::vector<std::vector<double>>& sequence);

// --- CNN model -----------------------------------------------------------------

struct PoolSpec {
    int window = 2;
    int stride = 2;
};

// INPUT -> conv -> pool -> conv -> pool -> FC x3, final FC sigmoid.
struct CnnModel {
    TensorShape input;
    ConvSpec conv1, conv2;
    PoolSpec pool1, pool2;
    FcStack head;

    TensorShape feature_shape() const;  // shape after the second pool
    std::vector<double> features(const Tensor3& frame, int workers = 1) const;
};

std::vector<double> cnn_forward(const CnnModel& model, const Frame& frame, int workers = 1);

// --- seeded construction ---------------------------------------------------------

Matrix random_matrix(int rows, int cols, std::uint64_t seed, double lo = -0.5, double hi = 0.5);

// fc_sizes are the three head widths (last = score count). Hidden layers are
// sigmoid, the final layer sigmoid as well.
CnnModel make_cnn_model(const TensorShape& input, const TensorShape& filter1, int padding1,
                        int stride1, const TensorShape& filter2, int padding2, int stride2,
                        const PoolSpec& pool, const std::vector<int>& fc_sizes,
                        std::uint64_t seed);

LstmModel make_lstm_model(int input_size, int hidden_size, int output_size,
                          bool output_gate_bias, std::uint64_t seed);

}  // namespace divs
