"""Independent reference implementations used as test oracles.

Written as plain loops over dicts, sharing no code with the package.
"""
import itertools


def naive_slot_cost(prev, now, models, bandwidth_gbps, beta, w, mu_l, mu_r):
    """models: list of dicts with size_gb, gpu_mem_gb, io_delay_s, infer_delay_s."""
    l1 = l2 = l3 = 0.0
    beta_sum = 0.0
    for m, model in enumerate(models):
        if now[m] < prev[m]:
            l1 += model["size_gb"] * 8 / bandwidth_gbps
            l2 += model["io_delay_s"]
            l3 += model["infer_delay_s"]
            beta_sum += beta[m]
    switching = (l1 + l2 + l3) / beta_sum if beta_sum > 0 else 0.0
    r1 = sum(model["size_gb"] for m, model in enumerate(models) if now[m])
    r2 = sum(model["gpu_mem_gb"] for m, model in enumerate(models) if now[m])
    resource = r1 + w * r2
    return {"l1_s": l1, "l2_s": l2, "l3_s": l3, "switching": switching,
            "r1_gb": r1, "r2_gb": r2, "resource": resource, "total": mu_l * switching + mu_r * resource}


def naive_feasible(bits, models, storage, gpu, energy, static):
    s = sum(model["size_gb"] for b, model in zip(bits, models) if b)
    g = sum(model["gpu_mem_gb"] for b, model in zip(bits, models) if b)
    e = static + sum(model["energy_kw"] for b, model in zip(bits, models) if b)
    return s <= storage * (1 + 1e-9) and g <= gpu * (1 + 1e-9) and e <= energy * (1 + 1e-9)


def enumerate_optimum(prev, models, edge, beta, w, mu_l, mu_r):
    """Exhaustive argmin; returns (cost, bits) with ties to the smallest bit string."""
    best = None
    for bits in itertools.product((0, 1), repeat=len(models)):
        if not naive_feasible(bits, models, edge["storage_gb"], edge["gpu_gb"], edge["energy_kw"], edge["static_kw"]):
            continue
        c = naive_slot_cost(prev, bits, models, edge["bandwidth_gbps"], beta, w, mu_l, mu_r)["total"]
        if best is None or c < best[0]:
            best = (c, bits)
    return best


def catalog_dicts(catalog):
    return [{f: getattr(m, f) for f in ("size_gb", "gpu_mem_gb", "energy_kw", "io_delay_s", "infer_delay_s")}
            for m in catalog]
