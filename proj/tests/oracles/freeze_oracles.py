"""Reference values frozen into the C++ unit tests.

Every series here is built from the same 31-bit LCG the tests use, so the C++
side can regenerate the inputs exactly. Run with python3 and paste the output
into the matching test constants.
"""
import numpy as np
from sklearn.svm import SVR
from statsmodels.tsa.seasonal import seasonal_decompose
from statsmodels.tsa.stattools import acf, adfuller, pacf


def lcg_noise(n, seed):
    state = seed
    out = []
    for _ in range(n):
        state = (1103515245 * state + 12345) % (1 << 31)
        out.append(state / float(1 << 31) - 0.5)
    return np.array(out)


def ar1(n, phi, seed):
    e = lcg_noise(n, seed)
    x = np.zeros(n)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


def show(name, values):
    values = np.atleast_1d(values)
    print(f"{name} = {{" + ", ".join(repr(float(v)) for v in values) + "};")


stationary = ar1(200, 0.5, 7)
walk = ar1(200, 1.0, 11)
for label, x in (("stationary", stationary), ("walk", walk)):
    for reg in ("n", "c", "ct"):
        stat, p, lags, nobs, crit = adfuller(x, maxlag=3, autolag=None, regression=reg)
        show(f"adf_{label}_{reg}", [stat, lags, nobs, crit["1%"], crit["5%"], crit["10%"]])

show("acf_stationary", acf(stationary, nlags=6, fft=False))
show("pacf_stationary", pacf(stationary, nlags=6, method="ldb"))

t = np.arange(48)
seasonal_series = 10 + 0.3 * t + 2 * np.sin(2 * np.pi * t / 12) + lcg_noise(48, 3)
dec = seasonal_decompose(seasonal_series, period=12, model="additive")
show("decompose_trend_6_to_9", dec.trend[6:10])
show("decompose_seasonal_first_12", dec.seasonal[:12])
show("decompose_resid_6_to_9", dec.resid[6:10])

sample = lcg_noise(37, 5) * 100
show("quantiles", np.percentile(sample, [0, 10, 25, 50, 75, 90, 100]))
show("describe_std", [np.std(sample, ddof=1)])

X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0]])
y = np.array([0.0, 1.2, 1.9, 3.4, 3.9])
svr = SVR(kernel="rbf", C=100.0, epsilon=0.1, gamma=0.5, tol=1e-10).fit(X, y)
beta = np.zeros(5)
beta[svr.support_] = svr.dual_coef_[0]
K = np.exp(-0.5 * (X - X.T) ** 2)
objective = 0.5 * beta @ K @ beta - y @ beta + 0.1 * np.abs(beta).sum()
show("svr5_beta", beta)
show("svr5_bias_objective", [svr.intercept_[0], objective])
