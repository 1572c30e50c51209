// SPDX-License-Identifier: Apache-2.0
#include "sten/gru.hpp"

#include <stdexcept>

namespace sten {

namespace {

Mat sigmoid_array(const Mat& a) { return (1.0 / (1.0 + (-a.array()).exp())).matrix(); }

void require(bool ok, const char* what) {
  if (!ok) {
    throw std::invalid_argument(std::string("gru: ") + what);
  }
}

}  // namespace

GruParams make_gru_params(std::size_t input_dim, std::size_t hidden_dim) {
  GruParams p;
  p.w_z = p.w_r = p.w_h = Matrix(hidden_dim, input_dim);
  p.u_z = p.u_r = p.u_h = Matrix(hidden_dim, hidden_dim);
  p.b_z = p.b_r = p.b_h = Matrix(hidden_dim, 1);
  return p;
}

void check_gru_shapes(const GruWeights& p) {
  const auto d = p.w_z.rows();
  const auto in = p.w_z.cols();
  require(d > 0 && in > 0, "empty parameters");
  for (const Mat* w : {&p.w_r, &p.w_h}) {
    require(w->rows() == d && w->cols() == in, "input weight shape mismatch");
  }
  for (const Mat* u : {&p.u_z, &p.u_r, &p.u_h}) {
    require(u->rows() == d && u->cols() == d, "recurrent weight shape mismatch");
  }
  for (const Mat* b : {&p.b_z, &p.b_r, &p.b_h}) {
    require(b->rows() == d && b->cols() == 1, "bias shape mismatch");
  }
}

Vec gru_step(const Vec& x, const Vec& h_prev, const GruWeights& p) {
  check_gru_shapes(p);
  require(x.size() == p.w_z.cols(), "input dimension mismatch");
  require(h_prev.size() == p.w_z.rows(), "hidden dimension mismatch");
  const Vec z = sigmoid_array(p.w_z * x + p.u_z * h_prev + p.b_z);
  const Vec r = sigmoid_array(p.w_r * x + p.u_r * h_prev + p.b_r);
  const Vec rh = r.cwiseProduct(h_prev);
  const Vec c = (p.w_h * x + p.u_h * rh + p.b_h).array().tanh().matrix();
  return (1.0 - z.array()).matrix().cwiseProduct(h_prev) + z.cwiseProduct(c);
}

Vec gru_encode(const Mat& seq, const GruWeights& p, const std::optional<Vec>& h0) {
  require(seq.rows() >= 1, "empty sequence");
  Vec h = h0.value_or(Vec::Zero(p.w_z.rows()));
  for (Eigen::Index t = 0; t < seq.rows(); ++t) {
    h = gru_step(seq.row(t).transpose(), h, p);
  }
  return h;
}

Mat gru_forward(const GruWeights& p, std::span<const Mat> xs, GruTape* tape) {
  check_gru_shapes(p);
  require(!xs.empty(), "empty sequence");
  const Eigen::Index d = p.w_z.rows();
  const Eigen::Index batch = xs[0].cols();
  Mat h = Mat::Zero(d, batch);
  if (tape != nullptr) {
    tape->h.assign(1, h);
    tape->z.clear();
    tape->r.clear();
    tape->c.clear();
  }
  Mat az(d, batch);
  Mat ar(d, batch);
  Mat ac(d, batch);
  for (const Mat& x : xs) {
    require(x.rows() == p.w_z.cols() && x.cols() == batch, "input dimension mismatch");
    az.noalias() = p.w_z * x;
    az.noalias() += p.u_z * h;
    az.colwise() += p.b_z.col(0);
    ar.noalias() = p.w_r * x;
    ar.noalias() += p.u_r * h;
    ar.colwise() += p.b_r.col(0);
    Mat z = sigmoid_array(az);
    Mat r = sigmoid_array(ar);
    const Mat rh = r.cwiseProduct(h);
    ac.noalias() = p.w_h * x;
    ac.noalias() += p.u_h * rh;
    ac.colwise() += p.b_h.col(0);
    Mat c = ac.array().tanh().matrix();
    h = h + z.cwiseProduct(c - h);
    if (tape != nullptr) {
      tape->h.push_back(h);
      tape->z.push_back(std::move(z));
      tape->r.push_back(std::move(r));
      tape->c.push_back(std::move(c));
    }
  }
  return h;
}

void gru_backward(const GruWeights& p, std::span<const Mat> xs, const GruTape& tape,
                  const Mat& dh_final, std::span<const Mat> dh_steps, GruWeights& grads) {
  const std::size_t steps = xs.size();
  require(tape.z.size() == steps && tape.h.size() == steps + 1, "tape does not match inputs");
  require(dh_steps.empty() || dh_steps.size() == steps, "per-step gradient count mismatch");
  Mat dh = dh_final;
  Mat da_z;
  Mat da_r;
  Mat da_c;
  Mat drh;
  for (std::size_t k = steps; k-- > 0;) {
    if (!dh_steps.empty()) {
      dh += dh_steps[k];
    }
    const Mat& x = xs[k];
    const Mat& h_prev = tape.h[k];
    const Mat& z = tape.z[k];
    const Mat& r = tape.r[k];
    const Mat& c = tape.c[k];

    da_c = dh.cwiseProduct(z).cwiseProduct((1.0 - c.array().square()).matrix());
    da_z = dh.cwiseProduct(c - h_prev).cwiseProduct(z.cwiseProduct((1.0 - z.array()).matrix()));

    const Mat rh = r.cwiseProduct(h_prev);
    grads.w_h.noalias() += da_c * x.transpose();
    grads.u_h.noalias() += da_c * rh.transpose();
    grads.b_h += da_c.rowwise().sum();

    drh.noalias() = p.u_h.transpose() * da_c;
    da_r = drh.cwiseProduct(h_prev).cwiseProduct(r.cwiseProduct((1.0 - r.array()).matrix()));

    grads.w_z.noalias() += da_z * x.transpose();
    grads.u_z.noalias() += da_z * h_prev.transpose();
    grads.b_z += da_z.rowwise().sum();
    grads.w_r.noalias() += da_r * x.transpose();
    grads.u_r.noalias() += da_r * h_prev.transpose();
    grads.b_r += da_r.rowwise().sum();

    Mat dh_prev = dh.cwiseProduct((1.0 - z.array()).matrix()) + drh.cwiseProduct(r);
    dh_prev.noalias() += p.u_z.transpose() * da_z;
    dh_prev.noalias() += p.u_r.transpose() * da_r;
    dh = std::move(dh_prev);
  }
}

}  // namespace sten
