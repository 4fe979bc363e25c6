import time
import numpy as np
import spdefit as sf
from spdefit.studies import GeneratorSpec, RateStudyConfig, run_misspecification_study
from spdefit.estimate import EstimationProblem
from spdefit.simulate import DriftDictionary, DriftTerm, DriftTermKind, VelocityField

L = 2 * np.pi
dom = sf.Domain(2, (L, L))
plain = EstimationProblem(DriftDictionary([DriftTerm(DriftTermKind.DIFFUSION)]))

cases = [
    ("A=16 q=1", VelocityField((0.0, 0.0), (16.0, 16.0))),
    ("A=8 q=4", VelocityField((0.0, 0.0), (8.0, 8.0), cos_wavenumber=(4, 4))),
    ("A=6 q=8", VelocityField((0.0, 0.0), (6.0, 6.0), cos_wavenumber=(8, 8))),
]
for name, vel in cases:
    gen = GeneratorSpec(
        model=DriftDictionary([
            DriftTerm(DriftTermKind.DIFFUSION, intensity=1.0),
            DriftTerm(DriftTermKind.ADVECTION, intensity=1.0, velocity=vel),
        ]),
        noise=sf.NoiseSpec(sf.NoiseKind.WHITE, sigma=1.0),
        domain=dom, T=5.0, dt=1e-4, N_sim=512, include_zero_mode=True)
    t0 = time.time()
    cfg = RateStudyConfig(gen, {"plain": plain}, N_list=[25, 50, 100, 200], replicates=20, seed=61000)
    res = run_misspecification_study(cfg)
    c = res.curves[0]
    print(f"{name}: {time.time()-t0:.0f}s rmse={np.array2string(c.rmse, precision=4)} "
          f"bias={np.array2string(c.bias, precision=4)} slope={c.slope:+.3f}", flush=True)
