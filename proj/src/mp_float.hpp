#pragma once

#include <mpfr.h>

#include <utility>

namespace pdtp::detail {

// Minimal RAII value type over mpfr_t for the extended-precision series
// paths. Round-to-nearest everywhere. Not part of the public API.
class MpFloat {
 public:
  explicit MpFloat(mpfr_prec_t prec) {
    mpfr_init2(v_, prec);
    mpfr_set_zero(v_, 1);
  }
  MpFloat(double x, mpfr_prec_t prec) {
    mpfr_init2(v_, prec);
    mpfr_set_d(v_, x, MPFR_RNDN);
  }
  MpFloat(const MpFloat& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  MpFloat(MpFloat&& o) noexcept {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_swap(v_, o.v_);
  }
  MpFloat& operator=(const MpFloat& o) {
    if (this != &o) mpfr_set(v_, o.v_, MPFR_RNDN);
    return *this;
  }
  MpFloat& operator=(MpFloat&& o) noexcept {
    if (this != &o) mpfr_swap(v_, o.v_);
    return *this;
  }
  ~MpFloat() { mpfr_clear(v_); }

  mpfr_ptr raw() { return v_; }
  mpfr_srcptr raw() const { return v_; }

  void set(double x) { mpfr_set_d(v_, x, MPFR_RNDN); }
  void set(long x) { mpfr_set_si(v_, x, MPFR_RNDN); }
  void set(const MpFloat& o) { mpfr_set(v_, o.v_, MPFR_RNDN); }
  void set_zero() { mpfr_set_zero(v_, 1); }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  int sign() const { return mpfr_sgn(v_); }
  bool is_zero() const { return mpfr_zero_p(v_); }
  /// floor(log2|x|); 0 for x = 0.
  long exp2() const { return is_zero() ? 0 : mpfr_get_exp(v_); }

  void add(const MpFloat& a, const MpFloat& b) {
    mpfr_add(v_, a.v_, b.v_, MPFR_RNDN);
  }
  void sub(const MpFloat& a, const MpFloat& b) {
    mpfr_sub(v_, a.v_, b.v_, MPFR_RNDN);
  }
  void mul(const MpFloat& a, const MpFloat& b) {
    mpfr_mul(v_, a.v_, b.v_, MPFR_RNDN);
  }
  void div(const MpFloat& a, const MpFloat& b) {
    mpfr_div(v_, a.v_, b.v_, MPFR_RNDN);
  }

  void add_abs_of(const MpFloat& x) {
    if (mpfr_sgn(x.v_) >= 0)
      mpfr_add(v_, v_, x.v_, MPFR_RNDN);
    else
      mpfr_sub(v_, v_, x.v_, MPFR_RNDN);
  }

  void mul_d(double x) { mpfr_mul_d(v_, v_, x, MPFR_RNDN); }
  void mul_si(long x) { mpfr_mul_si(v_, v_, x, MPFR_RNDN); }
  void div_si(long x) { mpfr_div_si(v_, v_, x, MPFR_RNDN); }
  void neg() { mpfr_neg(v_, v_, MPFR_RNDN); }

  /// *this = a^x for a > 0.
  void pow_d(const MpFloat& a, double x) {
    MpFloat e(x, mpfr_get_prec(v_));
    mpfr_pow(v_, a.v_, e.v_, MPFR_RNDN);
  }

  void gamma_of(const MpFloat& x) { mpfr_gamma(v_, x.v_, MPFR_RNDN); }

 private:
  mpfr_t v_;
};

}  // namespace pdtp::detail
