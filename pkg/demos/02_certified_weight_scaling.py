"""How the minimal certified weight scales, at desk size.

Two sweeps over random order-3 models in two variables, with the Hessian
shifted so its smallest eigenvalue sits exactly on the margin delta:

  * grow the third-order tensor magnitude at fixed delta — the geometric
    mean of sigma_bar grows roughly quadratically;
  * shrink delta at fixed tensor magnitude — sigma_bar grows roughly like
    1/delta.

Both fitted log-log slopes are printed, along with the per-cell table the
command-line scans would write as CSV.
"""

import numpy as np

from sosarp import ScanConfig, scan_delta, scan_tensor


def show(result, x_label):
    print(f"  {x_label:>10s} {'seed':>4s} {'sigma_bar':>12s}")
    for row in result.rows:
        if row.row == "cell":
            print(f"  {row.x:>10.4g} {row.seed:>4d} {row.sigma_bar:>12.4g}")
        else:
            print(f"  {row.x:>10.4g} {'gmean':>4s} {row.sigma_bar:>12.4g}")
    print(f"  fitted log-log slope: {result.slope:+.3f} "
          f"({result.failure_count} failed cells)\n")


# ---------------------------------------------------------------------------
# 1. Weight vs tensor magnitude (delta fixed at 1)
# ---------------------------------------------------------------------------
print("weight vs tensor magnitude, 3 seeds per point:")
config = ScanConfig(n=2, p=3, seeds=3, seed=0, delta=1.0,
                    scales=(1.0, 10.0, 100.0, 1000.0))
show(scan_tensor(config), "magnitude")

# ---------------------------------------------------------------------------
# 2. Weight vs margin delta (tensor magnitude fixed at 1)
#
# Each seed draws one model and re-certifies it at every delta, so the
# decay is measured on a fixed tensor rather than across fresh draws.
# ---------------------------------------------------------------------------
print("weight vs margin delta, 3 seeds per point:")
config = ScanConfig(n=2, p=3, seeds=3, seed=0, scale=1.0,
                    deltas=tuple(np.logspace(-3, 0, 7)))
show(scan_delta(config), "delta")

print("the full-size sweeps (10 seeds) are what `sosarp scan-tensor` and")
print("`sosarp scan-delta` write to CSV; expected slopes are about +2 and -1.")
