// Copyright 2026 The poselift Authors.
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

#include "poselift/nn.hpp"

namespace poselift::nn {

namespace {

double evaluate(const ScalarFunction& f, const std::vector<Tensor<double>>& params) {
  Tape<double> tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.constant(p));
  Var out = f(tape, vars);
  if (tape.value(out).size() != 1) throw Error("gradient_check: objective is not scalar");
  return tape.value(out).data[0];
}

}  // namespace

GradCheckReport gradient_check(const ScalarFunction& f, const std::vector<Tensor<double>>& params,
                               double step, double tol, const GradientTamper& tamper,
                               double floor) {
  GradCheckReport report;
  report.tolerance = tol;

  std::vector<Tensor<double>> analytic;
  double objective = 0.0;
  {
    Tape<double> tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.leaf(p));
    Var out = f(tape, vars);
    objective = tape.value(out).data[0];
    tape.backward(out);
    for (Var v : vars) analytic.push_back(tape.grad(v));
  }
  if (tamper) tamper(analytic);
  const double scaled_floor = floor * std::max(1.0, std::abs(objective));

  std::vector<Tensor<double>> probe = params;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    double worst = 0.0;
    for (std::size_t i = 0; i < params[pi].size(); ++i) {
      const double original = probe[pi].data[i];
      probe[pi].data[i] = original + step;
      const double up = evaluate(f, probe);
      probe[pi].data[i] = original - step;
      const double down = evaluate(f, probe);
      probe[pi].data[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi].data[i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), scaled_floor});
      worst = std::max(worst, rel);
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      ++report.n_checked;
    }
    report.per_param_rel_error.push_back(worst);
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  return report;
}

}  // namespace poselift::nn
