#!/usr/bin/env python3
"""Convert AlexNet convolution weights stored in an .npz archive to EFW1.

The archive must hold conv1_w, conv1_b, ..., conv5_w, conv5_b with weights in
[out][in/groups][k][k] layout (Caffe and PyTorch both use it). An optional
`mean` array is either three per-channel values or a full (3, 227, 227) mean
image. Caffe models are trained on BGR input; pass --bgr to reorder conv1's
input channels and the mean so the network accepts the RGB images elmdoc
feeds it.

Extracting the arrays from a Caffe model with pycaffe:

    net = caffe.Net("deploy.prototxt", "weights.caffemodel", caffe.TEST)
    arrays = {}
    for i in range(1, 6):
        arrays[f"conv{i}_w"] = net.params[f"conv{i}"][0].data
        arrays[f"conv{i}_b"] = net.params[f"conv{i}"][1].data
    numpy.savez("alexnet.npz", **arrays, mean=numpy.array([104.0, 117.0, 123.0]))
"""

import argparse
import struct
import sys

import numpy as np

# (name, kernel, stride, pad, groups) followed by the layers after each conv.
CONVS = [
    ("conv1", 11, 4, 0, 1, ["relu", "lrn", "pool"]),
    ("conv2", 5, 1, 2, 2, ["relu", "lrn", "pool"]),
    ("conv3", 3, 1, 1, 1, ["relu"]),
    ("conv4", 3, 1, 1, 2, ["relu"]),
    ("conv5", 3, 1, 1, 2, ["relu", "pool"]),
]
INPUT = (3, 227, 227)


def u32(v):
    return struct.pack("<I", v)


def f32s(a):
    return np.ascontiguousarray(a, dtype="<f4").tobytes()


def convert(arrays, bgr):
    layers = []
    in_channels = INPUT[0]
    for name, k, stride, pad, groups, tail in CONVS:
        w = np.asarray(arrays[f"{name}_w"], dtype=np.float32)
        b = np.asarray(arrays[f"{name}_b"], dtype=np.float32).reshape(-1)
        out = w.shape[0]
        expected = (out, in_channels // groups, k, k)
        if w.shape != expected:
            sys.exit(f"{name}_w has shape {w.shape}, expected {expected}")
        if b.shape != (out,):
            sys.exit(f"{name}_b has shape {b.shape}, expected ({out},)")
        if name == "conv1" and bgr:
            w = w[:, ::-1, :, :]
        layers.append(b"\x00" + b"".join(u32(v) for v in (in_channels, out, k, stride, pad, groups)) + f32s(w) + f32s(b))
        for kind in tail:
            if kind == "relu":
                layers.append(b"\x01")
            elif kind == "pool":
                layers.append(b"\x02" + u32(3) + u32(2))
            else:
                layers.append(b"\x03" + u32(5) + f32s(np.array([1e-4, 0.75, 1.0])))
        in_channels = out

    mean = np.asarray(arrays["mean"], dtype=np.float32) if "mean" in arrays else np.zeros(3, np.float32)
    if bgr:
        mean = mean[::-1] if mean.ndim == 1 else mean[::-1, :, :]
    if mean.shape == (3,):
        channel, image, flags = mean, None, 0
    elif mean.shape == INPUT:
        channel, image, flags = np.zeros(3, np.float32), mean, 1
    else:
        sys.exit(f"mean has shape {mean.shape}, expected (3,) or {INPUT}")

    out = b"EFW1" + u32(1) + u32(len(layers)) + u32(flags)
    out += b"".join(u32(v) for v in INPUT) + f32s(channel)
    out += b"".join(layers)
    if image is not None:
        out += f32s(image)
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("npz")
    p.add_argument("out")
    p.add_argument("--bgr", action="store_true", help="weights expect BGR input (Caffe)")
    args = p.parse_args()
    with np.load(args.npz) as arrays:
        data = convert(dict(arrays), args.bgr)
    with open(args.out, "wb") as f:
        f.write(data)
    print(f"wrote {args.out} ({len(data)} bytes)", file=sys.stderr)


if __name__ == "__main__":
    main()
