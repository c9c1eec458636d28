#!/usr/bin/env python3
"""Writes taxi.pm: a lane-keeping taxi over cross-track error and heading."""

import argparse
import sys

ACTIONS = {"straight": 0, "left": -1, "right": 1}


def heading_change(action, p_main):
    """Distribution over heading deltas for one action."""
    d = ACTIONS[action]
    if d == 0:
        slip = (1.0 - p_main) / 2.0
        return {-1: slip, 0: p_main, 1: slip}
    return {d: p_main, 0: 1.0 - p_main}


def successors(cte, he, dh, gust):
    """Distribution over (cte, he) after a heading change; None is a crash."""
    he2 = he + dh
    if abs(he2) > 1:
        return {None: 1.0}
    out = {}
    for w, p in ((-1, gust), (0, 1.0 - 2.0 * gust), (1, gust)):
        if p == 0.0:
            continue
        cte2 = cte + he2 + w
        key = None if abs(cte2) > 2 else (cte2, he2)
        out[key] = out.get(key, 0.0) + p
    return out


def render(p_main, gust):
    out = [
        "// Lane-keeping taxi: cross-track error cte in [-2..2], heading he in [-1..1].",
        "// Leaving either range crashes the taxi into a single absorbing fail state.",
        f"// Generated by gen_taxi.py --p-main {p_main!r} --gust {gust!r}",
        "mdp",
        "",
        "module taxi",
        "  crashed : [0..1] init 0;",
        "  cte : [-2..2] init 0;",
        "  he : [-1..1] init 0;",
        "",
    ]
    for action in ACTIONS:
        for cte in range(-2, 3):
            for he in range(-1, 2):
                mass = {}
                for dh, p in heading_change(action, p_main).items():
                    for nxt, q in successors(cte, he, dh, gust).items():
                        mass[nxt] = mass.get(nxt, 0.0) + p * q
                terms = []
                for nxt, p in sorted(mass.items(), key=lambda kv: (kv[0] is not None, kv[0] or (0, 0))):
                    if nxt is None:
                        upd = "(crashed'=1)&(cte'=0)&(he'=0)"
                    else:
                        upd = f"(cte'={nxt[0]})&(he'={nxt[1]})"
                    terms.append(f"{p:.12g}:{upd}")
                out.append(f"  [{action}] crashed=0 & cte={cte} & he={he} -> " + " + ".join(terms) + ";")
        out.append("")
    out.append("  [straight] crashed=1 -> (crashed'=1);")
    out.append("endmodule")
    out.append("")
    out.append('label "fail" = crashed=1;')
    out.append("")
    return "\n".join(out)



def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p-main", type=float, default=0.93)
    ap.add_argument("--gust", type=float, default=0.02)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    text = render(args.p_main, args.gust)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as f:
            f.write(text)


if __name__ == "__main__":
    main()
