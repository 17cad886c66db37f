"""Operator command line.

Verbs: ``train``, ``eval``, ``sweep``, ``mech {tension|torque|sf|report}``,
``augment``, ``render``.  Exit codes: 0 success, 1 runtime or data fault,
2 usage or configuration fault.  Every run directory receives exactly one
``manifest.json`` naming the files the run produced.
"""

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from grasplab import mechanics
from grasplab.config import (
    EnvConfig,
    SHAPE_NAMES,
    TrainConfig,
    config_text,
    load_configs,
)
from grasplab.errors import (
    CheckpointError,
    ConfigError,
    DomainError,
    FormatError,
    StateError,
    TrainingFault,
)
from grasplab.learner.ddpg import (
    evaluate,
    load_agent,
    save_agent,
    train,
    write_curve_csv,
)
from grasplab.objects import ObjectPrimitive, SHAPE_DIMENSIONS
from grasplab.sim_env import GraspEnv
from grasplab.vision.augment import AugmentationSpec, build_augmented_dataset, load_dataset
from grasplab.vision.depth import CameraModel, render_depth
from grasplab.vision.pgm import write_pgm16

USAGE_EXIT = 2
FAULT_EXIT = 1


class UsageFault(Exception):
    pass


def _write_manifest(out_dir, command, resolved_config, seed, artifacts, outcome,
                    started, finished):
    manifest = {
        "command": command,
        "resolved_config": resolved_config,
        "seed": seed,
        "artifacts": sorted(str(a) for a in artifacts),
        "timestamps": {"started": started, "finished": finished},
        "outcome": outcome,
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _now():
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


def _ensure_out(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args):
    env_cfg, train_cfg = load_configs(args.config)
    out = _ensure_out(args.out)
    started = _now()
    agent, curve = train(lambda: GraspEnv(env_cfg), train_cfg, seed=args.seed)
    curve_path = out / "curve.csv"
    write_curve_csv(curve_path, curve)
    ckpt_path = out / "checkpoint.bin"
    save_agent(ckpt_path, agent, config_text_blob=config_text(env_cfg, train_cfg))
    outcome = {
        "steps": train_cfg.total_steps,
        "final_success_rate": curve[-1][1] if curve else None,
    }
    _write_manifest(out, "train", config_text(env_cfg, train_cfg), args.seed,
                    [curve_path, ckpt_path], outcome, started, _now())
    return 0


def cmd_eval(args):
    if args.episodes < 1:
        raise UsageFault("--episodes must be >= 1")
    objects = args.objects or list(SHAPE_NAMES)
    unknown = [o for o in objects if o not in SHAPE_NAMES]
    if unknown:
        raise UsageFault(f"unknown objects: {unknown}")
    agent, meta = load_agent(args.checkpoint)
    cfg_src = meta.get("config_text", "")
    if cfg_src:
        from grasplab.config import parse_kv_text, configs_from_dict
        env_cfg, _ = configs_from_dict(parse_kv_text(cfg_src))
    else:
        env_cfg = EnvConfig()
    env_cfg = replace(env_cfg, objects=tuple(objects))
    out = _ensure_out(args.out)
    started = _now()
    report = evaluate(agent, lambda: GraspEnv(env_cfg), args.episodes,
                      objects=objects, seed=args.seed)
    table_path = out / "eval.csv"
    table_path.write_text(report.to_csv_text())
    _write_manifest(out, "eval", cfg_src, args.seed, [table_path],
                    {"aggregate": report.aggregate, "episodes": args.episodes},
                    started, _now())
    print(report.to_csv_text(), end="")
    return 0


def cmd_sweep(args):
    capacities = args.capacities
    if len(capacities) < 2:
        raise UsageFault("sweep needs at least 2 buffer capacities")
    env_cfg, base_cfg = load_configs(args.config)
    out = _ensure_out(args.out)
    started = _now()
    rows = []
    artifacts = []
    for cap in capacities:
        if cap < 1:
            raise UsageFault(f"capacity must be >= 1, got {cap}")
        cfg = replace(base_cfg, buffer_capacity=int(cap))
        agent, curve = train(lambda: GraspEnv(env_cfg), cfg, seed=args.seed)
        final = curve[-1][1] if curve else 0.0
        rows.append((int(cap), final))
        leg_curve = out / f"curve_capacity_{int(cap)}.csv"
        write_curve_csv(leg_curve, curve)
        artifacts.append(leg_curve)
    sweep_path = out / "sweep.csv"
    with open(sweep_path, "w") as fh:
        fh.write("buffer_capacity,final_success_rate\n")
        for cap, final in rows:
            fh.write(f"{cap},{final:.4f}\n")
    artifacts.append(sweep_path)
    _write_manifest(out, "sweep", config_text(env_cfg, base_cfg), args.seed,
                    artifacts, {"capacities": [c for c, _ in rows]}, started, _now())
    print(sweep_path.read_text(), end="")
    return 0


def cmd_mech(args):
    if args.mech_cmd == "tension":
        value = mechanics.required_tension(args.fg, args.r, args.lja)
        print(f"{value:g}")
    elif args.mech_cmd == "torque":
        value = mechanics.servo_torque(args.d, args.t, args.theta)
        print(f"{value:g}")
    elif args.mech_cmd == "sf":
        value = mechanics.safety_factor(args.stress, args.strength)
        print(f"{value:.2f}")
    else:  # report
        summary = mechanics.DesignSummary(args.mass, args.force, args.speed,
                                          args.actuators)
        print(mechanics.design_report(summary), end="")
    return 0


def cmd_augment(args):
    sources = load_dataset(args.source)
    spec = AugmentationSpec(
        crop_fraction=tuple(args.crop), zoom=tuple(args.zoom),
        rotation_deg=tuple(args.rotation), multiplier=args.multiplier,
        seed=args.seed)
    out = _ensure_out(args.out)
    started = _now()
    manifest = build_augmented_dataset(sources, spec, out)
    _write_manifest(out, "augment",
                    {"source": str(args.source), "spec": manifest}, args.seed,
                    [out / "manifest.json"], {"emitted": manifest["emitted"]},
                    started, _now())
    print(f"emitted {manifest['emitted']} samples "
          f"({manifest['sources']} sources x {manifest['multiplier']})")
    return 0


def _parse_scene_config(raw):
    """Group obj<N>.* keys into object constructors plus camera settings."""
    objects = {}
    camera_kv = {}
    for key, value in raw.items():
        if key.startswith("obj") and "." in key:
            name, _, field = key.partition(".")
            objects.setdefault(name, {})[field] = value
        elif key.startswith("camera_"):
            camera_kv[key[len("camera_"):]] = value
        else:
            raise ConfigError(f"unknown scene key: {key!r}")
    built = []
    for name in sorted(objects):
        kv = objects[name]
        shape = kv.pop("shape", None)
        if shape not in SHAPE_NAMES:
            raise ConfigError(f"{name}: shape must be one of {SHAPE_NAMES}")
        pos = np.array([kv.pop("x", 0.0), kv.pop("y", 0.0), kv.pop("z", 0.0)],
                       dtype=float)
        yaw = float(kv.pop("yaw", 0.0))
        mass = float(kv.pop("mass", 0.1))
        expected = set(SHAPE_DIMENSIONS[shape])
        if set(kv) != expected:
            raise ConfigError(f"{name}: {shape} needs dimensions {sorted(expected)}")
        built.append(ObjectPrimitive(shape, {k: float(v) for k, v in kv.items()},
                                     pos, yaw, mass))
    cam = CameraModel(
        width=int(camera_kv.get("width", 64)),
        height=int(camera_kv.get("height", 64)),
        fov_deg=float(camera_kv.get("fov_deg", 60.0)),
        position=(float(camera_kv.get("x", 0.0)), float(camera_kv.get("y", 0.0)),
                  float(camera_kv.get("z", 0.5))),
        yaw=float(camera_kv.get("yaw", 0.0)),
        far_plane=float(camera_kv.get("far_plane", 2.0)))
    return built, cam


def cmd_render(args):
    from grasplab.config import read_kv_file
    scene_objects, camera = _parse_scene_config(read_kv_file(args.scene))
    image = render_depth(scene_objects, camera)
    out_path = Path(args.out)
    if out_path.suffix != ".pgm":
        out_dir = _ensure_out(out_path)
        out_path = out_dir / "depth.pgm"
    else:
        out_path.parent.mkdir(parents=True, exist_ok=True)
    started = _now()
    write_pgm16(out_path, image)
    _write_manifest(out_path.parent, "render", {"scene": str(args.scene)},
                    args.seed, [out_path], {"width": image.width,
                                            "height": image.height},
                    started, _now())
    print(f"wrote {out_path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="grasplab",
        description="desk-scale grasping laboratory: mechanics, simulation, learning")
    parser.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train the grasping policy")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--out", required=True)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint per object shape")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--episodes", type=int, default=100)
    p_eval.add_argument("--objects", nargs="*", default=None)
    p_eval.add_argument("--out", required=True)

    p_sweep = sub.add_parser("sweep", help="train across replay capacities")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--capacities", type=int, nargs="+", required=True)
    p_sweep.add_argument("--out", required=True)

    p_mech = sub.add_parser("mech", help="finger statics calculator")
    mech_sub = p_mech.add_subparsers(dest="mech_cmd", required=True)
    p_t = mech_sub.add_parser("tension")
    p_t.add_argument("--fg", type=float, required=True, help="pinch force, N")
    p_t.add_argument("--r", type=float, required=True, help="fingertip reach, mm")
    p_t.add_argument("--lja", type=float, default=mechanics.DEFAULT_JOINT_MOMENT_ARM_MM)
    p_q = mech_sub.add_parser("torque")
    p_q.add_argument("--d", type=float, required=True, help="horn diameter, mm")
    p_q.add_argument("--t", type=float, required=True, help="tendon tension, N")
    p_q.add_argument("--theta", type=float, required=True, help="horn angle, degrees")
    p_s = mech_sub.add_parser("sf")
    p_s.add_argument("--stress", type=float, required=True, help="max stress, MPa")
    p_s.add_argument("--strength", type=float, required=True, help="strength, MPa")
    p_r = mech_sub.add_parser("report")
    p_r.add_argument("--mass", type=float, required=True, help="total mass, g")
    p_r.add_argument("--force", type=float, required=True, help="max pinch force, N")
    p_r.add_argument("--speed", type=float, required=True, help="deg/s")
    p_r.add_argument("--actuators", type=int, required=True)

    p_aug = sub.add_parser("augment", help="expand a rectangle dataset")
    p_aug.add_argument("--source", required=True)
    p_aug.add_argument("--out", required=True)
    p_aug.add_argument("--multiplier", type=int, default=160)
    p_aug.add_argument("--crop", type=float, nargs=2, default=(0.75, 1.0))
    p_aug.add_argument("--zoom", type=float, nargs=2, default=(0.8, 1.2))
    p_aug.add_argument("--rotation", type=float, nargs=2, default=(-180.0, 180.0))

    p_render = sub.add_parser("render", help="render a scene config to 16-bit PGM")
    p_render.add_argument("--scene", required=True)
    p_render.add_argument("--out", required=True)
    return parser


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "mech": cmd_mech,
    "augment": cmd_augment,
    "render": cmd_render,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageFault, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (DomainError, FormatError, StateError, TrainingFault, CheckpointError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAULT_EXIT


if __name__ == "__main__":
    sys.exit(main())
