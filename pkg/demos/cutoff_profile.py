# Tabulate the radial localisation weight and its positivity margin.
import numpy as np

from dampednls.cutoff import RadialCutoff, verify_positivity

cut = RadialCutoff(1.0)
r = np.linspace(0, 3, 13)
ev = cut.evaluate(r, 2)
print(" r      chi      chi1     chi2")
for row in zip(r, ev.chi, ev.chi1, ev.chi2):
    print("  ".join(f"{x:7.4f}" for x in row))

for N in (2, 3):
    for completion in ("cubic", "quintic"):
        rep = verify_positivity(RadialCutoff(1.0, completion=completion), N, 0.05)
        print(N, completion, "ok" if rep.ok else "violated", "largest eps", round(rep.largest_eps, 4))
