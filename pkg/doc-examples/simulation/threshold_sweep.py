import mixflowpy
from mixflowpy.diagnostics import run_threshold_sweep
from mixflowpy.thermo import build_frame
from mixflowpy.transport import QuasiDiagonalClosure

spec = mixflowpy.types.MixtureSpec([1.0, 2.0, 4.0])
frame = build_frame(spec.vbar)

result = run_threshold_sweep(spec, frame, QuasiDiagonalClosure(), count=50, q=[0.3])
for key, value in result.summary().items():
    print(f"{key:>16}: {value:.6g}")
