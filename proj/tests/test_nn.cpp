#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sdmforge/nn.hpp"
#include "sdmforge/surrogate.hpp"

using namespace sdmforge;
using Catch::Approx;

namespace {

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(1e-10, std::abs(a) + std::abs(b));
}

std::vector<double> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-scale, scale);
    return v;
}

// generic central-difference check of dL/dx against an analytic gradient
void check_grad(const std::function<double(const std::vector<double>&)>& loss,
                std::vector<double> x, const std::vector<double>& analytic, double h = 1e-6,
                double tol = 1e-6) {
    REQUIRE(x.size() == analytic.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double lp = loss(x);
        x[i] = keep - h;
        const double lm = loss(x);
        x[i] = keep;
        const double fd = (lp - lm) / (2 * h);
        INFO("index " << i << " fd " << fd << " analytic " << analytic[i]);
        CHECK(rel_err(fd, analytic[i]) < tol);
    }
}

}  // namespace

TEST_CASE("linear layer gradients") {
    Rng rng(1);
    const int nin = 5, nout = 3;
    const auto w = random_vec(nin * nout + nout, rng);
    const auto in = random_vec(nin, rng);
    const auto c = random_vec(nout, rng);  // loss = sum c*out

    auto loss_of = [&](const std::vector<double>& wall, const std::vector<double>& input) {
        std::vector<double> out(nout);
        nn::linear_forward(input.data(), nin, wall.data(), wall.data() + nin * nout, out.data(),
                           nout);
        double l = 0;
        for (int o = 0; o < nout; ++o) l += c[o] * out[o];
        return l;
    };

    std::vector<double> grad(w.size(), 0.0), din(nin, 0.0);
    nn::linear_backward(in.data(), nin, w.data(), c.data(), nout, din.data(), grad.data(),
                        grad.data() + nin * nout);

    check_grad([&](const std::vector<double>& wx) { return loss_of(wx, in); }, w, grad);
    check_grad([&](const std::vector<double>& ix) { return loss_of(w, ix); }, in, din);
}

TEST_CASE("conv3 gradients") {
    Rng rng(2);
    const int cin = 3, cout = 2;
    nn::Tensor3<double> in;
    in.resize(4, 3, 5, cin);
    for (double& v : in.v) v = rng.uniform(-1, 1);
    const auto w = random_vec(27 * cin * cout + cout, rng, 0.5);
    const auto c = random_vec(static_cast<std::size_t>(4) * 3 * 5 * cout, rng);

    auto loss_of = [&](const std::vector<double>& wall, const nn::Tensor3<double>& input) {
        nn::Tensor3<double> out;
        nn::conv3_forward(input, wall.data(), wall.data() + 27 * cin * cout, out, cout);
        double l = 0;
        for (std::size_t i = 0; i < out.v.size(); ++i) l += c[i] * out.v[i];
        return l;
    };

    nn::Tensor3<double> dout;
    dout.resize(4, 3, 5, cout);
    dout.v.assign(c.begin(), c.end());
    nn::Tensor3<double> din;
    std::vector<double> grad(w.size(), 0.0);
    nn::conv3_backward(in, w.data(), dout, din, grad.data(), grad.data() + 27 * cin * cout);

    check_grad([&](const std::vector<double>& wx) { return loss_of(wx, in); }, w, grad);
    // input gradient
    check_grad(
        [&](const std::vector<double>& iv) {
            nn::Tensor3<double> i2 = in;
            i2.v = iv;
            return loss_of(w, i2);
        },
        in.v, din.v);
}

TEST_CASE("conv1 gradients") {
    Rng rng(3);
    const int cin = 4, cout = 2;
    nn::Tensor3<double> in;
    in.resize(3, 2, 2, cin);
    for (double& v : in.v) v = rng.uniform(-1, 1);
    const auto w = random_vec(cin * cout + cout, rng);
    const auto c = random_vec(in.voxels() * cout, rng);

    auto loss_of = [&](const std::vector<double>& wall, const std::vector<double>& iv) {
        nn::Tensor3<double> i2 = in;
        i2.v = iv;
        nn::Tensor3<double> out;
        nn::conv1_forward(i2, wall.data(), wall.data() + cin * cout, out, cout);
        double l = 0;
        for (std::size_t i = 0; i < out.v.size(); ++i) l += c[i] * out.v[i];
        return l;
    };

    nn::Tensor3<double> dout;
    dout.resize(3, 2, 2, cout);
    dout.v.assign(c.begin(), c.end());
    nn::Tensor3<double> din;
    std::vector<double> grad(w.size(), 0.0);
    nn::conv1_backward(in, w.data(), dout, din, grad.data(), grad.data() + cin * cout);

    check_grad([&](const std::vector<double>& wx) { return loss_of(wx, in.v); }, w, grad);
    check_grad([&](const std::vector<double>& iv) { return loss_of(w, iv); }, in.v, din.v);
}

TEST_CASE("trilinear resize gradients and constant preservation") {
    Rng rng(4);
    nn::Tensor3<double> in;
    in.resize(3, 4, 5, 2);
    for (double& v : in.v) v = rng.uniform(-1, 1);
    const int ox = 5, oy = 7, oz = 9;
    const auto c = random_vec(static_cast<std::size_t>(ox) * oy * oz * 2, rng);

    auto loss_of = [&](const std::vector<double>& iv) {
        nn::Tensor3<double> i2 = in;
        i2.v = iv;
        nn::Tensor3<double> out;
        nn::resize_forward(i2, ox, oy, oz, out);
        double l = 0;
        for (std::size_t i = 0; i < out.v.size(); ++i) l += c[i] * out.v[i];
        return l;
    };

    nn::Tensor3<double> dout;
    dout.resize(ox, oy, oz, 2);
    dout.v.assign(c.begin(), c.end());
    nn::Tensor3<double> din;
    nn::resize_backward(dout, in.nx, in.ny, in.nz, in.c, din);
    check_grad(loss_of, in.v, din.v);

    // constant field resizes to the same constant, bit-exact
    nn::Tensor3<float> cf, cout_t;
    cf.resize(5, 5, 6, 3);
    for (float& v : cf.v) v = 0.73f;
    nn::resize_forward(cf, 13, 13, 15, cout_t);
    for (float v : cout_t.v) CHECK(v == 0.73f);

    // downsize direction too
    nn::resize_forward(cf, 3, 4, 2, cout_t);
    for (float v : cout_t.v) CHECK(v == 0.73f);
}

TEST_CASE("film conditioning gradients") {
    Rng rng(5);
    const int ch = 3;
    nn::Tensor3<double> in;
    in.resize(2, 3, 2, ch);
    for (double& v : in.v) v = rng.uniform(-1, 1);
    const auto sb = random_vec(2 * ch, rng, 0.3);  // scale then bias
    const auto c = random_vec(in.v.size(), rng);

    auto loss_of = [&](const std::vector<double>& sbx, const std::vector<double>& iv) {
        nn::Tensor3<double> i2 = in;
        i2.v = iv;
        nn::Tensor3<double> out;
        nn::film_forward(i2, sbx.data(), sbx.data() + ch, out);
        double l = 0;
        for (std::size_t i = 0; i < out.v.size(); ++i) l += c[i] * out.v[i];
        return l;
    };

    nn::Tensor3<double> dout;
    dout.resize(2, 3, 2, ch);
    dout.v.assign(c.begin(), c.end());
    nn::Tensor3<double> din;
    std::vector<double> dsb(2 * ch, 0.0);
    nn::film_backward(in, sb.data(), dout, din, dsb.data(), dsb.data() + ch);

    check_grad([&](const std::vector<double>& sbx) { return loss_of(sbx, in.v); }, sb, dsb);
    check_grad([&](const std::vector<double>& iv) { return loss_of(sb, iv); }, in.v, din.v);
}

TEST_CASE("full decoder gradient vs central differences (reduced, 64-bit)") {
    const GridDecoderArch arch = GridDecoderArch::reduced();
    const detail::DecoderOffsets off(arch);
    Rng rng(6);
    std::vector<double> w(off.total);
    {
        // mirror the scaled-uniform init in double
        Rng wrng(77);
        for (const LayerSpec& l : decoder_layers(arch)) {
            std::span<double> seg(w.data() + l.offset, l.count);
            if (l.name.ends_with(".b"))
                std::fill(seg.begin(), seg.end(), 0.0);
            else
                nn::init_uniform(seg, l.fan_in, wrng);
        }
    }
    const std::array<double, 4> p{0.3, -0.5, 0.8, 0.1};
    const auto dims = arch.out_dims();
    const std::size_t nvox = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    const auto target = random_vec(nvox, rng, 0.5);

    auto loss_of = [&](const std::vector<double>& wx) {
        detail::DecoderActs<double> acts;
        detail::decoder_forward<double>(arch, off, wx.data(), p, p, acts);
        double l = 0;
        for (std::size_t i = 0; i < nvox; ++i) {
            const double d = acts.out.v[i] - target[i];
            l += d * d;
        }
        return l / static_cast<double>(nvox);
    };

    // analytic gradient
    std::vector<double> grad(off.total, 0.0);
    {
        detail::DecoderActs<double> acts;
        detail::decoder_forward<double>(arch, off, w.data(), p, p, acts);
        nn::Tensor3<double> dout;
        dout.resize(dims[0], dims[1], dims[2], 1);
        for (std::size_t i = 0; i < nvox; ++i)
            dout.v[i] = 2.0 * (acts.out.v[i] - target[i]) / static_cast<double>(nvox);
        detail::decoder_backward<double>(arch, off, w.data(), p, p, acts, dout, grad.data());
    }

    // spot-check 50 random weights with central differences
    int checked = 0;
    while (checked < 50) {
        const std::size_t i = rng.uniform_index(off.total);
        const double h = 1e-5 * std::max(1.0, std::abs(w[i]));
        const double keep = w[i];
        w[i] = keep + h;
        const double lp = loss_of(w);
        w[i] = keep - h;
        const double lm = loss_of(w);
        w[i] = keep;
        const double fd = (lp - lm) / (2 * h);
        if (std::abs(fd) < 1e-12 && std::abs(grad[i]) < 1e-12) continue;  // dead ReLU path
        INFO("weight " << i << " fd " << fd << " analytic " << grad[i]);
        CHECK(rel_err(fd, grad[i]) <= 1e-4);
        ++checked;
    }
}

TEST_CASE("decoder weight count matches closed-form shape arithmetic") {
    const GridDecoderArch a = GridDecoderArch::standard();
    // independent arithmetic from the architecture description
    const std::size_t coarse_n =
        static_cast<std::size_t>(a.coarse[0]) * a.coarse[1] * a.coarse[2] * a.coarse_ch;
    std::size_t expect = 0;
    expect += 4 * a.embed[0] + a.embed[0];
    expect += static_cast<std::size_t>(a.embed[0]) * a.embed[1] + a.embed[1];
    expect += static_cast<std::size_t>(a.embed[1]) * coarse_n + coarse_n;
    int cin = a.coarse_ch;
    for (int s = 0; s < 3; ++s) {
        expect += static_cast<std::size_t>(27) * cin * a.stage_ch[s] + a.stage_ch[s];
        expect += static_cast<std::size_t>(4) * 2 * a.stage_ch[s] + 2 * a.stage_ch[s];
        cin = a.stage_ch[s];
    }
    expect += cin + 1;
    CHECK(decoder_weight_count(a) == expect);
    CHECK(decoder_weight_count(a) == 1269929);

    const SurrogateModel m = init_model(1);
    CHECK(m.weights.size() == expect);
}

TEST_CASE("adam: zero learning rate leaves weights, determinism holds") {
    Rng rng(9);
    std::vector<float> w(100);
    for (float& x : w) x = static_cast<float>(rng.uniform(-1, 1));
    const std::vector<float> w0 = w;
    std::vector<float> g(100);
    for (float& x : g) x = static_cast<float>(rng.uniform(-1, 1));

    nn::Adam<float> adam_zero;
    adam_zero.lr = 0.0;
    adam_zero.step(std::span<float>(w), std::span<const float>(g));
    CHECK(w == w0);

    auto run = [&](double lr) {
        std::vector<float> wx = w0;
        nn::Adam<float> a;
        a.lr = lr;
        for (int s = 0; s < 5; ++s) a.step(std::span<float>(wx), std::span<const float>(g));
        return wx;
    };
    CHECK(run(1e-3) == run(1e-3));
    CHECK(run(1e-3) != w0);
}
