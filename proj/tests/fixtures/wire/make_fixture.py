"""Writes the wire-protocol golden files with an encoder independent of the C++ codecs."""
import base64
import io
import json
import struct

from PIL import Image

W, H = 4, 3
pixels = [((x * 60 + y * 7) % 256, (x * 13 + y * 90) % 256, (255 - x * 40 - y * 30) % 256)
          for y in range(H) for x in range(W)]
depth = [0.5 + 0.25 * x + 1.5 * y for y in range(H) for x in range(W)]
mask = [1 if (x, y) in {(1, 1), (2, 1)} else 0 for y in range(H) for x in range(W)]
filled = list(pixels)
for i, m in enumerate(mask):
    if m:
        filled[i] = (10, 20, 30)


def png_rgb(values):
    img = Image.new("RGB", (W, H))
    img.putdata(values)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


def png_mask(values):
    img = Image.new("L", (W, H))
    img.putdata([255 * v for v in values])
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


def pfm(values):
    out = f"Pf\n{W} {H}\n-1.0\n".encode()
    for y in reversed(range(H)):
        out += struct.pack("<" + "f" * W, *values[y * W:(y + 1) * W])
    return base64.b64encode(out).decode()


golden = {
    "width": W,
    "height": H,
    "pixels": pixels,
    "map": depth,
    "mask": mask,
    "filled": filled,
    "disparity_response": {"map": pfm(depth)},
    "inpaint_request": {"image": png_rgb(pixels), "mask": png_mask(mask)},
    "inpaint_response": {"image": png_rgb(filled)},
    "generate_response": {"image": png_rgb(pixels)},
    "error_response": {"error": "image too small"},
}
with open("golden.json", "w") as f:
    json.dump(golden, f, indent=1)
