# Same focusing datum, increasing damping.  Small a collapses almost at
# once, large a disperses; bisection locates the switch.
from dampednls import ProblemSpec, SolverConfig, make_grid
from dampednls.experiments import RunConfig, initial_verdicts, simulate, threshold_bisection

cfg = RunConfig(
    spec=ProblemSpec(1, 4, -1, 0.0),
    grid=make_grid(32, 1024, 1),
    initial={"kind": "gaussian", "amplitude": 3.0, "width": 1.0},
    solver=SolverConfig(dt_init=1e-3, dt_min=1e-12, T_final=3.0, adapt=True,
                        blowup_grad_factor=4, sample_stride=100),
)

for v in initial_verdicts(cfg):
    if v.applicable:
        print(v.theorem, v.branch.value, "t* =", v.t_star)

for a in (0.0, 1.0, 5.0, 20.0, 40.0):
    print(f"a = {a:5.1f}  ->  {simulate(cfg.with_damping(a)).describe()}")

res = threshold_bisection(cfg, 0.0, 40.0, 0.05)
print(f"threshold bracket [{res.a_lo}, {res.a_hi}] after {res.runs} midpoints")
