// Copyright 2026 The stiffdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "stiffdiff/ad/tensor.hpp"

namespace stiffdiff::ad {

class Tape;

// Handle to a node on a tape. Only valid for the tape that produced it.
struct Var {
  int id = -1;
};

// Reverse-mode tape over dense tensors. Nodes are recorded in evaluation
// order; backward() replays them in strict reverse order, so gradient
// accumulation is deterministic. A tape is single-threaded and is rebuilt
// for every training step.
class Tape {
 public:
  // --- leaves ---------------------------------------------------------
  Var leaf(Shape shape, std::span<const double> values);   // constant
  Var leaf_zeros(Shape shape);                             // constant zeros
  Var param(Tensor& t);  // gradient leaf bound to an external tensor

  // --- primitives -----------------------------------------------------
  Var matmul(Var a, Var b);              // [m,k] x [k,n]
  Var add(Var a, Var b);                 // same shape, or [m,n] + [1,n]
  Var sub(Var a, Var b);                 // same shape
  Var mul(Var a, Var b);                 // elementwise, same shape
  Var scale(Var a, double s);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var softplus(Var a);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, int begin, int len);
  Var sum(Var a);                        // scalar [1,1]
  Var mean_squared_error(Var a, Var b);  // scalar [1,1]

  // Fused recurrent cells. Mathematically these are compositions of the
  // primitives above; fusing them keeps the tape small enough to backprop
  // through a few hundred timesteps. Gate layout along columns:
  //   GRU  wx:[I,3H] wh:[H,3H] blocks [reset | update | candidate]
  //   LSTM wx:[I,4H] wh:[H,4H] blocks [input | forget | cell | output],
  //        state is [B,2H] = [h | c], returns the next [h | c].
  Var gru_cell(Var x, Var h, Var wx, Var wh, Var bx, Var bh);
  Var lstm_cell(Var x, Var hc, Var wx, Var wh, Var bx, Var bh);

  // --- execution ------------------------------------------------------
  // Seeds d(loss)=1 and sweeps the tape in reverse. Gradients of bound
  // parameters are accumulated into Tensor::grad. `required`, when given,
  // lists parameters that must be reachable from the loss.
  void backward(Var loss);
  void backward(Var loss, std::span<Tensor* const> required);

  const Shape& shape(Var v) const { return nodes_[v.id].shape; }
  const std::vector<double>& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const;
  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;      // allocated on demand during backward
    std::vector<int> inputs;
    std::function<void(Tape&, Node&)> backprop;  // may be empty (leaf)
    std::vector<std::vector<double>> saved;      // forward activations
    Tensor* bound = nullptr;
    bool needs_grad = false;
  };

  int push(Node n);
  Node& node(Var v) { return nodes_[v.id]; }
  std::vector<double>& grad_buffer(int id);
  void check_rank2(Var v, const char* op) const;

  std::vector<Node> nodes_;

  friend struct TapeTestPeer;
};

}  // namespace stiffdiff::ad
