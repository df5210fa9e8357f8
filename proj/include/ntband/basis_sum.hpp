#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ntband/errors.hpp"

namespace ntband {

// Closed function family for everything the expansion produces: sums of
//   coef * eta^p * exp(rate*eta) * {1, cos, sin}(omega*eta),   eta = log(zeta).
// Power solutions zeta^theta, log corrections zeta^theta log^p(zeta), and the
// oscillatory complex-case basis zeta^{theta_r} cos/sin(theta_i log zeta) are
// all of this form, and the family is closed under d/deta and multiplication.

enum class Trig : unsigned char { None, Cos, Sin };

struct BasisTerm {
    double coef = 0.0;
    int eta_pow = 0;     // p >= 0
    double rate = 0.0;   // s in exp(s*eta)
    double omega = 0.0;  // trig frequency, >= 0; meaningful only if trig != None
    Trig trig = Trig::None;
};

class BasisSum {
public:
    BasisSum() = default;
    explicit BasisSum(std::vector<BasisTerm> t) : terms_(std::move(t)) { normalize(); }

    static BasisSum power(double coef, double rate, int eta_pow = 0) {
        return BasisSum({{coef, eta_pow, rate, 0.0, Trig::None}});
    }
    static BasisSum trig_power(double coef, double rate, double omega, Trig tr, int eta_pow = 0) {
        return BasisSum({{coef, eta_pow, rate, omega, tr}});
    }

    const std::vector<BasisTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    BasisSum& operator+=(const BasisSum& o) {
        terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
        normalize();
        return *this;
    }
    friend BasisSum operator+(BasisSum a, const BasisSum& b) { a += b; return a; }

    BasisSum& scale(double s) {
        for (auto& t : terms_) t.coef *= s;
        return *this;
    }
    friend BasisSum operator*(double s, BasisSum a) { a.scale(s); return a; }

    // multiply every term by zeta^dr (rate shift)
    BasisSum& shift_rate(double dr) {
        for (auto& t : terms_) t.rate += dr;
        return *this;
    }

    BasisSum deriv_eta() const {
        std::vector<BasisTerm> out;
        out.reserve(terms_.size() * 3);
        for (const auto& t : terms_) {
            if (t.eta_pow > 0)
                out.push_back({t.coef * t.eta_pow, t.eta_pow - 1, t.rate, t.omega, t.trig});
            if (t.rate != 0.0)
                out.push_back({t.coef * t.rate, t.eta_pow, t.rate, t.omega, t.trig});
            if (t.trig == Trig::Cos)
                out.push_back({-t.coef * t.omega, t.eta_pow, t.rate, t.omega, Trig::Sin});
            else if (t.trig == Trig::Sin)
                out.push_back({t.coef * t.omega, t.eta_pow, t.rate, t.omega, Trig::Cos});
        }
        return BasisSum(std::move(out));
    }

    friend BasisSum operator*(const BasisSum& a, const BasisSum& b) {
        std::vector<BasisTerm> out;
        out.reserve(a.terms_.size() * b.terms_.size() * 2);
        for (const auto& s : a.terms_)
            for (const auto& t : b.terms_) {
                const double c = s.coef * t.coef;
                const int p = s.eta_pow + t.eta_pow;
                const double r = s.rate + t.rate;
                if (s.trig == Trig::None) {
                    out.push_back({c, p, r, t.omega, t.trig});
                } else if (t.trig == Trig::None) {
                    out.push_back({c, p, r, s.omega, s.trig});
                } else {
                    const double wm = s.omega - t.omega, wp = s.omega + t.omega;
                    if (s.trig == Trig::Cos && t.trig == Trig::Cos) {
                        out.push_back({0.5 * c, p, r, wm, Trig::Cos});
                        out.push_back({0.5 * c, p, r, wp, Trig::Cos});
                    } else if (s.trig == Trig::Sin && t.trig == Trig::Sin) {
                        out.push_back({0.5 * c, p, r, wm, Trig::Cos});
                        out.push_back({-0.5 * c, p, r, wp, Trig::Cos});
                    } else if (s.trig == Trig::Sin && t.trig == Trig::Cos) {
                        out.push_back({0.5 * c, p, r, wp, Trig::Sin});
                        out.push_back({0.5 * c, p, r, wm, Trig::Sin});
                    } else { // Cos * Sin
                        out.push_back({0.5 * c, p, r, wp, Trig::Sin});
                        out.push_back({-0.5 * c, p, r, wm, Trig::Sin});
                    }
                }
            }
        return BasisSum(std::move(out));
    }

    double eval_eta(double eta) const {
        double s = 0.0;
        for (const auto& t : terms_) {
            double v = t.coef;
            for (int i = 0; i < t.eta_pow; ++i) v *= eta;
            if (t.rate != 0.0) v *= std::exp(t.rate * eta);
            if (t.trig == Trig::Cos) v *= std::cos(t.omega * eta);
            else if (t.trig == Trig::Sin) v *= std::sin(t.omega * eta);
            s += v;
        }
        return s;
    }

    // value and zeta-derivatives up to out.size()-1 (max order 3)
    void eval_zeta(double zeta, std::span<double> out) const {
        if (zeta <= 0.0) throw DomainError("BasisSum: zeta must be positive");
        const std::size_t m = out.size();
        const double eta = std::log(zeta);
        double g[4] = {0, 0, 0, 0};
        BasisSum cur = *this;
        for (std::size_t k = 0; k < m && k < 4; ++k) {
            g[k] = cur.eval_eta(eta);
            if (k + 1 < m) cur = cur.deriv_eta();
        }
        out[0] = g[0];
        if (m > 1) out[1] = g[1] / zeta;
        if (m > 2) out[2] = (g[2] - g[1]) / (zeta * zeta);
        if (m > 3) out[3] = (g[3] - 3.0 * g[2] + 2.0 * g[1]) / (zeta * zeta * zeta);
    }

    double eval(double zeta, int order = 0) const {
        if (order < 0 || order > 3) throw DomainError("BasisSum: order must be 0..3");
        double buf[4];
        eval_zeta(zeta, std::span<double>(buf, static_cast<std::size_t>(order) + 1));
        return buf[order];
    }

private:
    void normalize() {
        std::vector<BasisTerm> keep;
        keep.reserve(terms_.size());
        for (auto t : terms_) {
            if (t.trig != Trig::None && t.omega < 0.0) {
                t.omega = -t.omega;
                if (t.trig == Trig::Sin) t.coef = -t.coef;
            }
            if (t.trig != Trig::None && t.omega == 0.0) {
                if (t.trig == Trig::Sin) continue; // sin(0) = 0
                t.trig = Trig::None;
            }
            if (t.coef == 0.0) continue;
            // merge with an existing identical shape
            bool merged = false;
            for (auto& k : keep) {
                if (k.eta_pow == t.eta_pow && k.rate == t.rate && k.trig == t.trig &&
                    (k.trig == Trig::None || k.omega == t.omega)) {
                    k.coef += t.coef;
                    merged = true;
                    break;
                }
            }
            if (!merged) keep.push_back(t);
        }
        terms_ = std::move(keep);
    }

    std::vector<BasisTerm> terms_;
};

} // namespace ntband
