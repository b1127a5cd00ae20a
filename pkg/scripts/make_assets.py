"""Regenerate the bundled placeholder raster (white LOREM IPSUM text on a
transparent background).  Uses PIL's built-in bitmap font so the output is
deterministic and needs no system fonts.  Run from the repo root:

    python scripts/make_assets.py
"""

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

OUT = Path(__file__).resolve().parent.parent / "src/depthstage/assets/lorem_ipsum.png"


def main() -> None:
    font = ImageFont.load_default()
    text = "LOREM IPSUM"
    probe = Image.new("RGBA", (4, 4))
    bbox = ImageDraw.Draw(probe).textbbox((0, 0), text, font=font)
    w, h = bbox[2] - bbox[0], bbox[3] - bbox[1]
    pad = 4
    small = Image.new("RGBA", (w + 2 * pad, h + 2 * pad), (0, 0, 0, 0))
    ImageDraw.Draw(small).text((pad - bbox[0], pad - bbox[1]), text,
                               font=font, fill=(255, 255, 255, 255))
    # upscale 4x nearest for a chunky, clearly-visible placeholder
    big = small.resize((small.width * 4, small.height * 4), Image.NEAREST)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    big.save(OUT)
    arr = np.asarray(big)
    print(f"wrote {OUT} ({big.width}x{big.height}, "
          f"{(arr[..., 3] > 0).sum()} opaque px)")


if __name__ == "__main__":
    main()
