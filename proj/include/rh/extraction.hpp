#pragma once

namespace rh {

/// Extraction rate and its partial derivatives at a point (t, x). The
/// derivatives feed the local-linearisation stepper; they are zero wherever
/// the rate is clamped at 0.
struct ExtractionSample {
  double q = 0.0;
  double q_x = 0.0;
  double q_xx = 0.0;
  double q_t = 0.0;
};

/// A feedback extraction rule q(t, x), with t measured from the start of the
/// current period.
class ExtractionRule {
 public:
  virtual ~ExtractionRule() = default;
  virtual ExtractionSample evaluate(double t, double x) const = 0;
};

class ConstantExtraction final : public ExtractionRule {
 public:
  explicit ConstantExtraction(double q) : q_(q) {}
  ExtractionSample evaluate(double, double) const override { return {q_, 0.0, 0.0, 0.0}; }

 private:
  double q_;
};

/// View of another rule with its clock shifted: evaluate(t, x) returns
/// base.evaluate(t - shift, x). The base must outlive the view.
class ShiftedExtraction final : public ExtractionRule {
 public:
  ShiftedExtraction(const ExtractionRule& base, double shift) : base_(&base), shift_(shift) {}
  ExtractionSample evaluate(double t, double x) const override {
    return base_->evaluate(t - shift_, x);
  }

 private:
  const ExtractionRule* base_;
  double shift_;
};

}  // namespace rh
