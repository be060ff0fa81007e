"""Independent reference implementations used only by the tests.

Written in a deliberately different style from the package (explicit loops,
textbook formulas, mpmath for distributions) so agreement is evidence.
"""

import math

import mpmath
import numpy as np

ADC_MAX = 4095


# ---------------------------------------------------------------------------
# tactile


def tactile_oracle(counts, timestamps_ms, rate_hz=45.0, theta=0.05, gap=2):
    T = len(counts)
    flat = [[c / ADC_MAX for c in np.asarray(frame).reshape(-1).tolist()] for frame in counts]
    first = sorted(v for frame in flat[:5] for v in frame)
    m = len(first)
    base = first[m // 2] if m % 2 else 0.5 * (first[m // 2 - 1] + first[m // 2])
    P = [[max(v - base, 0.0) for v in frame] for frame in flat]
    every = [v for frame in P for v in frame]
    n = len(every)
    mean = sum(every) / n
    var = sum((v - mean) ** 2 for v in every) / n
    grad = sum(abs(P[t + 1][i] - P[t][i]) for t in range(T - 1) for i in range(25))
    grad = grad / ((T - 1) * 25) * rate_hz
    S = [sum(frame) for frame in P]
    roc = sum(abs(S[t + 1] - S[t]) for t in range(T - 1)) / (T - 1) * rate_hz

    def quantile(q):
        s = sorted(S)
        h = (len(s) - 1) * q
        lo = math.floor(h)
        hi = min(lo + 1, len(s) - 1)
        return s[lo] + (h - lo) * (s[hi] - s[lo])

    area = sum(sum(1 for v in frame if v > theta) for frame in P) / T
    active = [any(v > theta for v in frame) for frame in P]
    events = []
    t = 0
    while t < T:
        if active[t]:
            s = t
            while t + 1 < T and active[t + 1]:
                t += 1
            if events and s - events[-1][1] - 1 <= gap:
                events[-1][1] = t
            else:
                events.append([s, t])
        t += 1
    durs = [(timestamps_ms[e] - timestamps_ms[s]) / 1000.0 + 1.0 / rate_hz for s, e in events]
    return [mean, max(every), var, grad, quantile(0.5), quantile(0.75) - quantile(0.25), area,
            roc, math.sqrt(var), len(events), max(durs) if durs else 0.0,
            min(durs) if durs else 0.0, sum(durs) / len(durs) if durs else 0.0]


# ---------------------------------------------------------------------------
# audio


def _mel(f):
    return 2595.0 * math.log10(1.0 + f / 700.0)


def _hz(m):
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def audio_oracle(x, sr=44100, N=2048, hop=512, n_mel=26, n_mfcc=13):
    x = np.asarray(x, dtype=np.float64)
    window = np.array([0.5 - 0.5 * math.cos(2 * math.pi * n / (N - 1)) for n in range(N)])
    nbins = N // 2 + 1
    freqs = np.array([k * sr / N for k in range(nbins)])
    mel_pts = [_hz(_mel(0.0) + (_mel(sr / 2) - _mel(0.0)) * i / (n_mel + 1))
               for i in range(n_mel + 2)]
    fb = np.zeros((n_mel, nbins))
    for j in range(n_mel):
        lo, mid, hi = mel_pts[j], mel_pts[j + 1], mel_pts[j + 2]
        for k, f in enumerate(freqs):
            if lo < f < mid:
                fb[j, k] = (f - lo) / (mid - lo)
            elif f == mid:
                fb[j, k] = 1.0
            elif mid < f < hi:
                fb[j, k] = (hi - f) / (hi - mid)
    dct = np.zeros((n_mel, n_mel))
    for k in range(n_mel):
        scale = math.sqrt(1.0 / n_mel) if k == 0 else math.sqrt(2.0 / n_mel)
        for n in range(n_mel):
            dct[k, n] = scale * math.cos(math.pi * k * (2 * n + 1) / (2 * n_mel))

    n_frames = 1 + (len(x) - N) // hop
    acc = np.zeros(n_mfcc + 4)
    for i in range(n_frames):
        fr = x[i * hop:i * hop + N]
        spec = np.fft.fft(fr * window)[:nbins]
        mag = np.sqrt(spec.real ** 2 + spec.imag ** 2)
        tot = mag.sum()
        cen = (freqs * mag).sum() / tot if tot > 0 else 0.0
        bw = math.sqrt(((freqs - cen) ** 2 * mag).sum() / tot) if tot > 0 else 0.0
        signs = [1 if v >= 0 else -1 for v in fr]
        zc = sum(1 for a, b in zip(signs[:-1], signs[1:]) if a != b) / (N - 1)
        rms = math.sqrt(float(np.dot(fr, fr)) / N)
        energies = fb @ (mag ** 2)
        logs = np.log(np.maximum(energies, 1e-10))
        acc += np.concatenate([(dct @ logs)[:n_mfcc], [cen, bw, zc, rms]])
    return acc / n_frames


# ---------------------------------------------------------------------------
# statistics


def f_sf(F, d1, d2):
    x = mpmath.mpf(d2) / (d2 + d1 * mpmath.mpf(F))
    return float(mpmath.betainc(d2 / 2.0, d1 / 2.0, 0, x, regularized=True))


def t_cdf(t, df):
    t = mpmath.mpf(t)
    x = df / (df + t * t)
    tail = mpmath.betainc(df / 2.0, 0.5, 0, x, regularized=True) / 2
    return float(1 - tail if t > 0 else tail)


def icc_anova_oracle(Y):
    Y = np.asarray(Y, dtype=np.float64)
    n, k = Y.shape
    grand = sum(Y[i, j] for i in range(n) for j in range(k)) / (n * k)
    rmeans = [sum(Y[i, j] for j in range(k)) / k for i in range(n)]
    cmeans = [sum(Y[i, j] for i in range(n)) / n for j in range(k)]
    ssr = k * sum((r - grand) ** 2 for r in rmeans)
    ssc = n * sum((c - grand) ** 2 for c in cmeans)
    sst = sum((Y[i, j] - grand) ** 2 for i in range(n) for j in range(k))
    sse = sst - ssr - ssc
    msr = ssr / (n - 1)
    mse = sse / ((n - 1) * (k - 1))
    icc = (msr - mse) / (msr + (k - 1) * mse)
    F = msr / mse
    return icc, F, f_sf(F, n - 1, (n - 1) * (k - 1))


def anova_f(values, groups):
    values = [float(v) for v in values]
    labels = sorted(set(groups))
    grand = sum(values) / len(values)
    ssb = ssw = 0.0
    for g in labels:
        member = [v for v, h in zip(values, groups) if h == g]
        m = sum(member) / len(member)
        ssb += len(member) * (m - grand) ** 2
        ssw += sum((v - m) ** 2 for v in member)
    return (ssb / (len(labels) - 1)) / (ssw / (len(values) - len(labels)))


def recall_oracle(cm):
    rec = []
    for i in range(len(cm)):
        sup = sum(cm[i])
        if sup:
            rec.append(cm[i][i] / sup)
    return sum(rec) / len(rec)
