"""Independent reference values frozen into tests/oracle_values.hpp.

Run with numpy and scipy available: python3 tests/oracles/oracles.py
"""
import numpy as np
from scipy import constants as k
from scipy.linalg import eigh_tridiagonal, expm
from scipy.special import erfc
from scipy.optimize import bisect

e, hbar, me, eps0, h = k.e, k.hbar, k.m_e, k.epsilon_0, k.h


def tf_sigma(v, gv=2.0, mt=0.19, ef=0.0):
    x = ef + v
    return -e * e * gv * mt * me / (np.pi * hbar**2) * x if x > 0 else 0.0


print("tf_sigma_0p01 =", repr(float(tf_sigma(0.01))))

# Two-dielectric parallel plate, gate on top.
t1, e1, t2, e2, vg = 20e-9, 9.0, 30e-9, 13.2, 0.3
v_div = vg * (t2 / e2) / (t1 / e1 + t2 / e2)
print("divider =", repr(float(v_div)))

# Same plate with a TF sheet at the interface: V = V_lin + sigma(V) / (C1 + C2).
c_sum = eps0 * e1 / t1 + eps0 * e2 / t2
v_tf = bisect(lambda v: v - v_div - tf_sigma(v) / c_sum, -1.0, 1.0, xtol=1e-15)
print("tf_plate =", repr(float(v_tf)))

# Readout fidelity of two Gaussians separated by snr sigma, midpoint threshold.
for snr in (4.97, 6.54, 7.48, 10.6, 13.9):
    print(f"fidelity[{snr}] =", repr(float(1 - 0.5 * erfc(snr / (2 * np.sqrt(2))))))

# Double Gaussian well on a hard-wall box, finite-difference Hamiltonian.
def fd_levels(x, u_ev, mass_me, count):
    dx = (x[1] - x[0]) * 1e-9
    t = hbar**2 / (2 * mass_me * me * dx * dx) / e
    d = 2 * t + u_ev[1:-1]
    off = -t * np.ones(len(d) - 1)
    return eigh_tridiagonal(d, off, select="i", select_range=(0, count - 1))[0]


x = np.linspace(-150.0, 150.0, 1201)
u = -0.01 * (np.exp(-((x - 40) / 20) ** 2) + np.exp(-((x + 40) / 20) ** 2))
lv = fd_levels(x, u, 0.19, 3)
print("double_well_split_hz =", repr(float((lv[1] - lv[0]) / 2 * e / h)))

# Two-qubit exchange spectrum (H/h, Hz): f1 Sz1 + f2 Sz2 + J (S.S - 1/4).
sx = np.array([[0, 1], [1, 0]]) / 2
sy = np.array([[0, -1j], [1j, 0]]) / 2
sz = np.array([[1, 0], [0, -1]]) / 2
I = np.eye(2)


def two_qubit(f1, f2, j):
    ss = sum(np.kron(s, s) for s in (sx, sy, sz))
    return f1 * np.kron(sz, I) + f2 * np.kron(I, sz) + j * (ss - np.eye(4) / 4)


def branches(df, j):
    w, vecs = np.linalg.eigh(two_qubit(df, 0.0, j))
    # label eigenstates by dominant basis state (|uu>, |ud>, |du>, |dd>)
    lab = {int(np.argmax(abs(vecs[:, n]) ** 2)): w[n] for n in range(4)}
    target_ctrl_up = lab[0] - lab[1]
    target_ctrl_down = lab[2] - lab[3]
    return target_ctrl_down, target_ctrl_up


for j in (1e6, 10e6, 100e6):
    lo, hi = branches(50 * j, j)
    print(f"branch_separation[J={j:g}, df=50J] =", repr(float(abs(hi - lo))))
lo, hi = branches(400e6, 10e6)
print("branch_separation[J=10MHz, df=400MHz] =", repr(float(abs(hi - lo))))

# Rabi: off-resonant maximum flip probability at delta = 50 Omega.
print("rabi_offres_max =", repr(float(1 / (1 + 50.0**2))))






