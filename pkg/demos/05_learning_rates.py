"""Learning from a dependent input sequence at the predicted speed.

Inputs follow a base-3 digit chain (uniform marginal, geometric mixing), the
kernel has eigenvalues of order j^-2 and the target is smooth of order r.
Along the regularization schedule the median prediction error should fall
like the square root of the effective sample size to the power -4/5.
This is the same computation as `depconc rates`, at reduced size.
"""

import logging
import tempfile
import warnings

from depconc.experiments import parse_config, run

logging.getLogger("depconc").setLevel(logging.ERROR)

with tempfile.TemporaryDirectory() as out, warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)  # the high-probability regime starts far beyond these n
    for regime, extra in (("exponential", {}), ("polynomial", {"gamma": 2.0})):
        cfg = parse_config({"scenario": "rates", "trials": 10, "out_dir": out,
                            "params": {"regime": regime, "ns": [512, 1024, 2048, 4096], **extra}})
        res = run(cfg)
        s = res.summary
        print(f"\n{regime} mixing")
        print("     n   ell'   lambda     median error")
        for c in s["cells"]:
            print(f"{c['n']:6d} {c['ell_prime']:6d}  {c['lambda']:.5f}  {c['median_error']:.5f}")
        print(f"slope vs {s['slope_axis']}: {s['slope']:.3f} (theory {s['target_slope']:.3f})")
