# Defocusing cubic flow with damping: the profile e^{-itΔ}e^{at}u(t)
# settles, so successive Duhamel increments shrink.
from dampednls import ProblemSpec, SolverConfig, make_grid
from dampednls.experiments import RunConfig, scattering_probe

cfg = RunConfig(ProblemSpec(1, 2, 1, 1.0), make_grid(32, 256, 1),
                {"kind": "gaussian", "amplitude": 1.0, "width": 1.0},
                SolverConfig(dt_init=1e-2, T_final=4.0, sample_stride=10))

for t1, t2 in ((0.0, 1.0), (1.0, 2.0), (2.0, 4.0)):
    rep = scattering_probe(cfg, t1, t2)
    print(f"[{t1}, {t2}]  increment {rep.increment:.3e}  Strichartz {rep.strichartz:.3e}")

rep = scattering_probe(cfg, 0.0, 4.0)
for t in (0.0, 1.0, 2.0, 3.0):
    print(f"deficit at t={t}: {rep.deficit_at(t):.3e}")
