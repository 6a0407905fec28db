import argparse, json, time, traceback
from rotflow import cli

def go(name, ns_kw, overrides):
    ns = argparse.Namespace(seed=1, n=None, box=None, dt=None, t_end=None, out=None)
    for k, v in ns_kw.items():
        setattr(ns, k, v)
    t0 = time.time()
    try:
        rep, ok = cli.PRESETS[name](ns, overrides)
        dt = time.time() - t0
        print(f"== {name} ok={ok} ({dt:.0f}s)", flush=True)
        for k, v in rep.get('checks', {}).items():
            print(f"   {k}: {v}", flush=True)
        keep = {k: v for k, v in rep.items() if k not in ('rows', 'checks')}
        print(json.dumps(keep, default=str)[:1500], flush=True)
    except Exception:
        print(f"== {name} EXCEPTION after {time.time()-t0:.0f}s", flush=True)
        traceback.print_exc()

go("slab-profile", {"n": 256, "box": 48.0}, {})
go("hq-dispersion", {"n": 256, "box": 48.0}, {})
go("vp-dispersion", {"n": 256, "box": 48.0}, {})
go("commutator-probe", {"n": 256, "box": 48.0}, {"iters": 6})
go("linear-decay", {"n": 256, "box": 32.0}, {})
go("farfield", {"n": 128, "box": 32.0}, {})
go("wavepacket", {"n": 256, "box": 48.0}, {})
