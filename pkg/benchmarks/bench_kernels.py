"""Timing comparison of the compiled and numpy kernel backends.

Times the hot assembly kernels (stiffness, divergence, convection,
transport derivative, quartic functional) on a fixed S-bend mesh plus one
full nonlinear solve per backend.  Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from pipeflow import geometry, reference_flow as rf, solver
from pipeflow.fem import FESpace, ProblemData, assembly, kernels


def time_call(fn, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    spec = geometry.channel_spec(0.5, 0.9, 0.3, 0.3, middle_length=1.0, offset=0.6)
    mesh = geometry.generate_mesh(spec, 0.03)
    space = FESpace(mesh, spec)
    rng = np.random.default_rng(0)
    a = rng.standard_normal(space.n_vdofs)
    elem = space.gather_velocity(a)
    print(f"mesh: {mesh.n_triangles} triangles, {space.n_vdofs} velocity dofs")
    print(f"backends available: {kernels.available_backends()}")

    jobs = {
        "stiffness": lambda: assembly.assemble_stiffness(space),
        "divergence": lambda: assembly.assemble_divergence(space),
        "convection(skew)": lambda: assembly.assemble_convection(space, a, assembly.SKEW),
        "transport_deriv": lambda: assembly.assemble_transport_derivative(space, a, assembly.SKEW),
        "l4_value_grad": lambda: kernels.get_backend().l4_value_grad(space.p2, space.wdet, elem),
    }

    results = {}
    for backend in kernels.available_backends():
        kernels.set_backend(backend)
        results[backend] = {name: time_call(fn) for name, fn in jobs.items()}

    flow = rf.poiseuille_2d(1, 0.5, 0.3, 0.5, 0.05, spec.inlet.transform)
    data = ProblemData(0.05, g_star=flow.velocity)
    for backend in kernels.available_backends():
        kernels.set_backend(backend)
        t0 = time.perf_counter()
        solver.solve(space, data)
        results[backend]["full solve"] = time.perf_counter() - t0
    kernels.set_backend("auto")

    names = list(jobs) + ["full solve"]
    width = max(len(n) for n in names)
    header = f"{'kernel':<{width}}" + "".join(f"{b:>12}" for b in results) + "     speedup"
    print("\n" + header)
    print("-" * len(header))
    for name in names:
        row = f"{name:<{width}}"
        times = [results[b][name] for b in results]
        for t in times:
            row += f"{1e3 * t:>10.2f}ms"
        if len(times) == 2 and times[1] > 0:
            row += f"{times[0] / times[1]:>10.2f}x"
        print(row)


if __name__ == "__main__":
    main()
