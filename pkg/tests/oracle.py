"""Independent dense reference for the thermal model.

Builds the full conductance matrix cell pair by cell pair straight from the
physical formulas and solves G T = P + G_sink T_amb by dense elimination.
Shares no code with gputherm.thermal.
"""
import numpy as np


def _overlap(a0, a1, b0, b1):
    return max(0.0, min(a1, b1) - max(a0, b0))


def assemble(stack, nx, ny):
    W = stack.layers[0].floorplan.chip_width_m
    H = stack.layers[0].floorplan.chip_height_m
    L = len(stack.layers)
    dx, dy = W / nx, H / ny
    n = L * nx * ny

    def idx(l, ix, iy):
        return (l * ny + iy) * nx + ix

    G = np.zeros((n, n))

    def link(a, b, g):
        G[a, a] += g
        G[b, b] += g
        G[a, b] -= g
        G[b, a] -= g

    for l, layer in enumerate(stack.layers):
        k_sheet = layer.thickness_m / layer.material.thermal_resistivity
        for iy in range(ny):
            for ix in range(nx):
                if ix + 1 < nx:
                    link(idx(l, ix, iy), idx(l, ix + 1, iy), k_sheet * dy / dx)
                if iy + 1 < ny:
                    link(idx(l, ix, iy), idx(l, ix, iy + 1), k_sheet * dx / dy)
                if l + 1 < L:
                    up = stack.layers[l + 1]
                    r = (layer.material.thermal_resistivity * layer.thickness_m / 2
                         + up.material.thermal_resistivity * up.thickness_m / 2)
                    link(idx(l, ix, iy), idx(l + 1, ix, iy), dx * dy / r)
    g_sink = np.zeros(n)
    for iy in range(ny):
        for ix in range(nx):
            g_sink[idx(L - 1, ix, iy)] = 1.0 / (stack.convection_resistance_K_per_W * nx * ny)
    G += np.diag(g_sink)

    # unit -> dense injection column
    inject = {}
    for l, layer in enumerate(stack.layers):
        if not layer.has_power:
            continue
        for u in layer.floorplan.units:
            if u.is_void:
                continue
            col = np.zeros(n)
            for iy in range(ny):
                for ix in range(nx):
                    a = _overlap(ix * dx, (ix + 1) * dx, u.left_m, u.left_m + u.width_m) * \
                        _overlap(iy * dy, (iy + 1) * dy, u.bottom_m, u.bottom_m + u.height_m)
                    col[idx(l, ix, iy)] = a
            inject[u.name] = col / col.sum()
    return G, g_sink, inject


def solve(G, g_sink, inject, unit_powers, ambient):
    p = np.zeros(G.shape[0])
    for unit, w in unit_powers.items():
        p += w * inject[unit]
    return np.linalg.solve(G, p + g_sink * ambient)
