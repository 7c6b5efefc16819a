#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Independent reference values for the unit tests.

Everything here is computed with numpy / torch / scipy (or plain Python)
without touching the C++ code. Output is a C++ include file with frozen
constants:

    python3 tests/oracles/make_oracles.py > tests/unit/oracle_values.inc
"""

import math

import numpy as np
import torch
from scipy.optimize import brentq

torch.set_default_dtype(torch.float64)

MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed_label(parent: int, label: str) -> int:
    return splitmix64(parent ^ fnv1a64(label.encode()))


def hash_embed(text: str, d: int):
    out = [0.0] * d
    tokens, cur = [], ""
    for ch in text:
        if ch.isascii() and ch.isalnum():
            cur += ch.lower()
        else:
            if cur:
                tokens.append(cur)
            cur = ""
    if cur:
        tokens.append(cur)
    for t in tokens:
        h = fnv1a64(t.encode())
        out[h % d] += 1.0 if (h // d) % 2 == 0 else -1.0
    n = math.sqrt(sum(v * v for v in out))
    return [v / n for v in out] if n > 0 else out


def lit(x: float) -> str:
    return repr(float(x))


def arr(name, values, ctype="double"):
    body = ", ".join(lit(v) if ctype == "double" else str(v) for v in values)
    return f"inline constexpr {ctype} {name}[] = {{{body}}};"


# --- trajectory problem shared with the router tests ------------------------

D, N, K, TAU, STEPS = 4, 5, 3, 0.5, 3
SHAPES = [(D, D)] * 6 + [(D,)] * 4 + [(N, D), (N,)]
NAMES = ["W_r", "W_u", "W_n", "U_r", "U_u", "U_n", "b_r", "b_u", "b_in", "b_hn", "W_o", "b_o"]


def param_value(k, i):
    return 0.6 * math.sin(0.37 * (i + 1) + 1.3 * k)


def table_value(s, a, j):
    return math.cos(0.5 * (s + 1) + 0.9 * a + 0.31 * j)


def query_value(j):
    return math.sin(0.8 * j + 0.2)


def entropy_value(s, a):
    return 0.3 + 0.25 * ((3 * s + 5 * a) % 7)


def make_params():
    ps = []
    for k, shape in enumerate(SHAPES):
        n = int(np.prod(shape))
        ps.append(torch.tensor([param_value(k, i) for i in range(n)]).reshape(shape).requires_grad_(True))
    return ps


def ranking(zp, conf):
    loss = zp.new_zeros(())
    for a in range(len(zp)):
        for b in range(len(zp)):
            if conf[a] > conf[b]:
                loss = loss + torch.nn.functional.softplus(-(zp[a] - zp[b]))
    return loss


def trajectory(ps):
    Wr, Wu, Wn, Ur, Uu, Un, br, bu, bin_, bhn, Wo, bo = ps
    x = torch.tensor([query_value(j) for j in range(D)])
    h = torch.zeros(D)
    logits, ks, sels, alphas, losses = [], [], [], [], []
    for s in range(STEPS):
        r = torch.sigmoid(Wr @ x + Ur @ h + br)
        u = torch.sigmoid(Wu @ x + Uu @ h + bu)
        n = torch.tanh(Wn @ x + bin_ + r * (Un @ h + bhn))
        h = (1 - u) * n + u * h
        z = Wo @ h + bo
        p = torch.softmax(z / TAU, 0)
        k = min(K, int((p >= 1.0 / N).sum()))
        zl = z.detach().tolist()
        order = sorted(range(N), key=lambda i: (-zl[i], i))[:k]
        alpha = torch.softmax(z[order], 0)
        E = torch.tensor([entropy_value(s, a) for a in range(N)])
        conf = torch.softmax(-E, 0)
        losses.append(ranking(torch.softmax(z, 0), conf))
        emb = torch.tensor([[table_value(s, a, j) for j in range(D)] for a in order])
        x = (alpha[:, None] * emb).sum(0)
        logits.append(zl)
        ks.append(k)
        sels.append(order)
        alphas.append(alpha.detach().tolist())
    return logits, ks, sels, alphas, torch.stack(losses).mean()


def emit_trajectory(lines):
    ps = make_params()
    logits, ks, sels, alphas, loss = trajectory(ps)
    loss.backward()
    lines.append("namespace traj {")
    lines.append(f"inline constexpr std::size_t kDim = {D}, kPool = {N}, kMaxRoute = {K}, kSteps = {STEPS};")
    lines.append(f"inline constexpr double kTau = {lit(TAU)};")
    lines.append(arr("kLogits", [v for row in logits for v in row]))
    lines.append(arr("kK", ks, "int"))
    lines.append(arr("kSelected", [v for row in sels for v in row], "int"))
    lines.append(arr("kAlpha", [v for row in alphas for v in row]))
    lines.append(f"inline constexpr double kLoss = {lit(loss.item())};")
    for name, p in zip(NAMES, ps):
        ident = "kGrad_" + name
        lines.append(arr(ident, p.grad.reshape(-1).tolist()))
    lines.append("}  // namespace traj")


# --- single GRU step ----------------------------------------------------------


def emit_gru(lines):
    ps = [p.detach() for p in make_params()]
    Wr, Wu, Wn, Ur, Uu, Un, br, bu, bin_, bhn, Wo, bo = ps
    x = torch.tensor([0.3, -0.7, 0.2, 0.9])
    h = torch.tensor([0.1, 0.4, -0.5, 0.25])
    r = torch.sigmoid(Wr @ x + Ur @ h + br)
    u = torch.sigmoid(Wu @ x + Uu @ h + bu)
    n = torch.tanh(Wn @ x + bin_ + r * (Un @ h + bhn))
    hn = (1 - u) * n + u * h
    lines.append("namespace gru {")
    lines.append(arr("kX", x.tolist()))
    lines.append(arr("kH", h.tolist()))
    lines.append(arr("kReset", r.tolist()))
    lines.append(arr("kUpdate", u.tolist()))
    lines.append(arr("kCandidate", n.tolist()))
    lines.append(arr("kNext", hn.tolist()))
    lines.append(arr("kLogits", (Wo @ hn + bo).tolist()))
    lines.append("}  // namespace gru")


# --- losses on a fixed vector ---------------------------------------------------


def emit_losses(lines):
    logits = torch.tensor([0.4, -1.1, 2.0, 0.3, 0.9, -0.2], requires_grad=True)
    ent = torch.tensor([1.2, 0.4, 2.1, 0.4, 0.9, 1.7])  # one tie
    conf = torch.softmax(-ent, 0)
    c = conf.tolist()
    n = len(c)

    def listmle(zp):
        order = sorted(range(n), key=lambda i: (-c[i], i))
        loss = zp.new_zeros(())
        for i in range(n):
            rest = zp[order[i:]]
            loss = loss - zp[order[i]] + torch.logsumexp(rest, 0)
        return loss

    def triplet(zp):
        loss = zp.new_zeros(())
        for a in range(n):
            for b in range(n):
                if c[a] > c[b]:
                    loss = loss + torch.clamp(0.1 - (zp[a] - zp[b]), min=0.0)
        return loss

    kinds = {
        "Ranking": lambda zp: ranking(zp, c),
        "Mse": lambda zp: ((zp - conf) ** 2).mean(),
        "ListMle": listmle,
        "Triplet": triplet,
    }
    lines.append("namespace losses {")
    lines.append(arr("kLogits", logits.tolist()))
    lines.append(arr("kEntropy", ent.tolist()))
    lines.append(arr("kConfidence", c))
    for name, fn in kinds.items():
        z = logits.detach().clone().requires_grad_(True)
        zp = torch.softmax(z, 0)
        value = fn(zp)
        value.backward()
        lines.append(f"inline constexpr double k{name}Loss = {lit(value.item())};")
        lines.append(arr(f"k{name}Grad", z.grad.tolist()))
    lines.append("}  // namespace losses")


# --- AdamW ------------------------------------------------------------------------


def emit_adamw(lines):
    d, n = 2, 2
    sizes = [d * d] * 6 + [d] * 4 + [n * d, n]
    total = sum(sizes)
    w0 = torch.tensor([0.5 * math.cos(0.7 * i + 0.1) for i in range(total)])
    g1 = torch.tensor([0.3 * math.sin(1.1 * i) for i in range(total)])
    g2 = torch.tensor([-0.2 * math.cos(0.45 * i + 0.5) for i in range(total)])
    p = torch.nn.Parameter(w0.clone())
    opt = torch.optim.AdamW([p], lr=1e-3, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01)
    after = []
    for g in (g1, g2):
        p.grad = g.clone()
        opt.step()
        after.append(p.detach().clone())
    lines.append("namespace adamw {")
    lines.append(f"inline constexpr std::size_t kDim = {d}, kPool = {n};")
    lines.append(arr("kInit", w0.tolist()))
    lines.append(arr("kGrad1", g1.tolist()))
    lines.append(arr("kGrad2", g2.tolist()))
    lines.append(arr("kAfter1", after[0].tolist()))
    lines.append(arr("kAfter2", after[1].tolist()))
    lines.append("}  // namespace adamw")


# --- entropy helpers ----------------------------------------------------------------


def mixture_h(eps, v):
    top = 1 - eps + eps / v
    rest = eps / v
    h = 0.0
    if top > 0:
        h -= top * math.log(top)
    if rest > 0:
        h -= (v - 1) * rest * math.log(rest)
    return h


def emit_entropy(lines):
    v = 16
    targets = [0.0, 0.2, 1.0, 2.0, 2.7]
    eps = []
    for t in targets:
        if t == 0.0:
            eps.append(0.0)
        else:
            eps.append(brentq(lambda e: mixture_h(e, v) - t, 0.0, 1.0, xtol=1e-15, rtol=1e-15))
    dists = np.array([[0.5, 0.25, 0.125, 0.125], [0.7, 0.1, 0.1, 0.1], [0.25, 0.25, 0.25, 0.25]])
    pe = float(np.mean([-(p * np.log(p)).sum() for p in dists]))
    logprobs = [-0.1, -2.5, -3.0, -4.2, -6.0]
    q = np.exp(logprobs)
    q = q / q.sum()
    renorm = float(-(q * np.log(q)).sum())
    lines.append("namespace entropy {")
    lines.append(arr("kTargets", targets))
    lines.append(arr("kEpsilon", eps))
    lines.append(arr("kDistributions", dists.reshape(-1).tolist()))
    lines.append(f"inline constexpr double kPredictive = {lit(pe)};")
    lines.append(arr("kLogprobs", logprobs))
    lines.append(f"inline constexpr double kRenormalized = {lit(renorm)};")
    lines.append("}  // namespace entropy")


def emit_hashing(lines):
    lines.append("namespace hashing {")
    lines.append(f"inline constexpr std::uint64_t kFnvEmpty = {fnv1a64(b'')}ULL;")
    lines.append(f"inline constexpr std::uint64_t kFnvHello = {fnv1a64(b'hello')}ULL;")
    lines.append(f"inline constexpr std::uint64_t kSplitmix0 = {splitmix64(0)}ULL;")
    lines.append(f"inline constexpr std::uint64_t kSplitmix42 = {splitmix64(42)}ULL;")
    lines.append(f"inline constexpr std::uint64_t kDerive42Init = {derive_seed_label(42, 'router-init')}ULL;")
    lines.append(arr("kHelloWorld8", hash_embed("Hello, World!", 8)))
    lines.append(arr("kMixed16", hash_embed("The GRU router picks 2 agents; the GRU output feeds the head.", 16)))
    lines.append("}  // namespace hashing")


def main():
    lines = [
        "// SPDX-License-Identifier: Apache-2.0",
        "// Generated by tests/oracles/make_oracles.py. Do not edit.",
        "#pragma once",
        "#include <cstddef>",
        "#include <cstdint>",
        "namespace oracle {",
    ]
    emit_hashing(lines)
    emit_gru(lines)
    emit_trajectory(lines)
    emit_losses(lines)
    emit_adamw(lines)
    emit_entropy(lines)
    lines.append("}  // namespace oracle")
    print("\n".join(lines))


if __name__ == "__main__":
    main()
