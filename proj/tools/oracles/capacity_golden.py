"""Independent dense solve of the discrete p=2 capacity problem.

minimize ||Ra v|| + ||Rb v||  subject to  v >= 1_E  (v >= 0 off E)

with ||Ra v||^2 = sum_j dt h^d v_j' L v_j and
||Rb v||^2 = sum_j (h^d / dt) (v_{j+1} - v_j)' L^{-1} (v_{j+1} - v_j),
L the Dirichlet 3-point Laplacian. Solved as an SOCP with cvxpy.
"""
import argparse
import json

import cvxpy as cp
import numpy as np


def laplacian_1d(nx, h):
    main = 2.0 * np.ones(nx)
    off = -np.ones(nx - 1)
    return (np.diag(main) + np.diag(off, 1) + np.diag(off, -1)) / h**2


def capacity(nx, nt, extent, T, cells):
    h = extent / (nx + 1)
    dt = T / nt
    L = laplacian_1d(nx, h)
    G = np.linalg.cholesky(L)  # L = G G'
    Ginv = np.linalg.inv(G)
    N = nx
    Ra = np.kron(np.eye(nt), np.sqrt(dt * h) * G.T)
    D = np.zeros(((nt - 1) * N, nt * N))
    for j in range(nt - 1):
        D[j * N:(j + 1) * N, (j + 1) * N:(j + 2) * N] = np.eye(N)
        D[j * N:(j + 1) * N, j * N:(j + 1) * N] = -np.eye(N)
    Rb = np.kron(np.eye(nt - 1), np.sqrt(h / dt) * Ginv) @ D
    lb = np.zeros(nt * N)
    for j, i in cells:
        lb[j * N + i] = 1.0
    v = cp.Variable(nt * N)
    prob = cp.Problem(cp.Minimize(cp.norm(Ra @ v, 2) + cp.norm(Rb @ v, 2)), [v >= lb])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return prob.value, v.value


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nx", type=int, default=7)
    ap.add_argument("--nt", type=int, default=8)
    ap.add_argument("--extent", type=float, default=1.0)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--cell", type=int, nargs=2, action="append", metavar=("J", "I"))
    args = ap.parse_args()
    cells = args.cell or [(3, 3)]
    value, _ = capacity(args.nx, args.nt, args.extent, args.T, cells)
    print(json.dumps({"nx": args.nx, "nt": args.nt, "extent": args.extent, "T": args.T,
                      "cells": cells, "capacity": float("%.12g" % value)}))


if __name__ == "__main__":
    main()
