# Run a chirped focusing Gaussian with weak damping and check the
# conservation laws the damped flow should satisfy.
import numpy as np

from dampednls import ProblemSpec, SolverConfig, gaussian_data, make_grid, run
from dampednls.experiments import identity_residuals

spec = ProblemSpec(N=1, alpha=4, mu=-1, a=0.1)
grid = make_grid(32, 512, 1)
u0 = gaussian_data(grid, amplitude=1.0, width=1.0, chirp=-0.5)

out = run(u0, spec, SolverConfig(dt_init=1e-3, T_final=1.0, sample_stride=10))
print(out.describe())

t = np.array([s.t for s in out.samples])
m = np.array([s.mass for s in out.samples])
print("mass ratio vs e^{-2at}:", np.max(np.abs(m / m[0] / np.exp(-2 * spec.a * t) - 1)))

for name, value in identity_residuals(out.samples, spec).items():
    print(f"{name:8s} {value:.3e}")
