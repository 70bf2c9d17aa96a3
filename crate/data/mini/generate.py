"""Regenerates the synthetic 10-frame mini dataset in KITTI layout.

label_2/  ground truth, 15 fields per line
calib/    calibration with a KITTI-like P2
det_2/    hand-built detections (jittered, missed and spurious boxes), 16 fields
"""
import math
import os
import random

ROOT = os.path.dirname(os.path.abspath(__file__))
FX, CX, CY = 721.5377, 609.5593, 172.854
W, H = 1242, 375
P2 = [FX, 0, CX, 44.85728, 0, FX, CY, 0.2163791, 0, 0, 1, 0.002745884]

CALIB = """P0: 7.215377e+02 0.000000e+00 6.095593e+02 0.000000e+00 0.000000e+00 7.215377e+02 1.728540e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00
P1: 7.215377e+02 0.000000e+00 6.095593e+02 -3.875744e+02 0.000000e+00 7.215377e+02 1.728540e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00
P2: {p2}
P3: 7.215377e+02 0.000000e+00 6.095593e+02 -3.395242e+02 0.000000e+00 7.215377e+02 1.728540e+02 2.199936e+00 0.000000e+00 0.000000e+00 1.000000e+00 2.729905e-03
R0_rect: 9.999239e-01 9.837760e-03 -7.445048e-03 -9.869795e-03 9.999421e-01 -4.278459e-03 7.402527e-03 4.351614e-03 9.999631e-01
Tr_velo_to_cam: 7.533745e-03 -9.999714e-01 -6.166020e-04 -4.069766e-03 1.480249e-02 7.280733e-04 -9.998902e-01 -7.631618e-02 9.998621e-01 7.523790e-03 1.480755e-02 -2.717806e-01
Tr_imu_to_velo: 9.999976e-01 7.553071e-04 -2.035826e-03 -8.086759e-01 -7.854027e-04 9.998898e-01 -1.482298e-02 3.195559e-01 2.024406e-03 1.482454e-02 9.998881e-01 -7.997231e-01
"""

DIMS = {"Car": (1.53, 1.63, 3.88), "Pedestrian": (1.76, 0.66, 0.84), "Cyclist": (1.74, 0.60, 1.76)}


def corners(x, y, z, h, w, l, ry):
    c, s = math.cos(ry), math.sin(ry)
    out = []
    for ly in (0.0, -h):
        for lx, lz in ((l / 2, w / 2), (l / 2, -w / 2), (-l / 2, -w / 2), (-l / 2, w / 2)):
            out.append((x + c * lx + s * lz, y + ly, z - s * lx + c * lz))
    return out


def bbox(x, y, z, h, w, l, ry):
    us, vs = [], []
    for px, py, pz in corners(x, y, z, h, w, l, ry):
        us.append(FX * px / pz + CX)
        vs.append(FX * py / pz + CY)
    return (max(0.0, min(us)), max(0.0, min(vs)), min(float(W), max(us)), min(float(H), max(vs)))


def line(cls, trunc, occ, x, y, z, h, w, l, ry, score=None):
    alpha = ry - math.atan2(x, z)
    alpha = (alpha + math.pi) % (2 * math.pi) - math.pi
    b = bbox(x, y, z, h, w, l, ry)
    fields = [cls, f"{trunc:.2f}", str(occ), f"{alpha:.2f}"]
    fields += [f"{v:.2f}" for v in b]
    fields += [f"{v:.2f}" for v in (h, w, l, x, y, z, ry)]
    if score is not None:
        fields.append(f"{score:.2f}")
    return " ".join(fields)


def main():
    rng = random.Random(20231018)
    os.makedirs(os.path.join(ROOT, "label_2"), exist_ok=True)
    os.makedirs(os.path.join(ROOT, "calib"), exist_ok=True)
    os.makedirs(os.path.join(ROOT, "det_2"), exist_ok=True)
    p2 = " ".join(f"{v:.6e}" for v in P2)
    for frame in range(10):
        fid = f"{frame:06d}"
        objects = []
        if frame == 0:
            # a single car at 50 m: the default linear config keeps exactly two pseudo labels
            objects.append(("Car", 0.0, 0, 5.0, 1.0, 50.0, *DIMS["Car"], -1.50))
        else:
            for _ in range(rng.randint(2, 5)):
                cls = rng.choice(["Car", "Car", "Car", "Pedestrian", "Cyclist"])
                h, w, l = (round(d * rng.uniform(0.9, 1.1), 2) for d in DIMS[cls])
                z = round(rng.uniform(6.0, 70.0), 2)
                x = round(rng.uniform(-0.35, 0.35) * z, 2)
                y = round(rng.uniform(1.4, 1.9), 2)
                ry = round(rng.uniform(-math.pi, math.pi), 2)
                occ = rng.choice([0, 0, 1, 1, 2, 3])
                trunc = rng.choice([0.0, 0.0, 0.0, 0.1, 0.25, 0.4, 0.6])
                objects.append((cls, trunc, occ, x, y, z, h, w, l, ry))
        gt_lines = [line(*o) for o in objects]
        if frame % 3 == 1:
            gt_lines.append("DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10")
        with open(os.path.join(ROOT, "label_2", fid + ".txt"), "w") as f:
            f.write("\n".join(gt_lines) + "\n")
        with open(os.path.join(ROOT, "calib", fid + ".txt"), "w") as f:
            f.write(CALIB.format(p2=p2))

        det_lines = []
        for cls, trunc, occ, x, y, z, h, w, l, ry in objects:
            if rng.random() < 0.15:
                continue  # missed
            sx, sz, sry = (0.05, 0.006, 0.02) if rng.random() < 0.7 else (0.3, 0.04, 0.15)
            jx = round(x + rng.gauss(0, sx), 2)
            jz = round(z + rng.gauss(0, sz * z), 2)
            jry = round(ry + rng.gauss(0, sry), 2)
            jry = (jry + math.pi) % (2 * math.pi) - math.pi
            det_lines.append(line(cls, 0.0, 0, jx, y, jz, h, w, l, jry, score=rng.uniform(0.3, 0.99)))
        for _ in range(rng.randint(0, 2)):
            z = round(rng.uniform(8.0, 60.0), 2)
            x = round(rng.uniform(-0.3, 0.3) * z, 2)
            det_lines.append(line("Car", 0.0, 0, x, 1.6, z, *DIMS["Car"], 0.3, score=rng.uniform(0.1, 0.8)))
        with open(os.path.join(ROOT, "det_2", fid + ".txt"), "w") as f:
            f.write("".join(l + "\n" for l in det_lines))


if __name__ == "__main__":
    main()
