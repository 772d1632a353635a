#!/usr/bin/env python3
"""Writes the image test fixtures. PNGs use a minimal zlib + struct encoder;
the JPEG needs Pillow."""
import struct
import zlib
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def chunk(tag, data):
    body = tag + data
    return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)


def png(width, height, bit_depth, color_type, rows):
    raw = b"".join(b"\x00" + row for row in rows)
    ihdr = struct.pack(">IIBBBBB", width, height, bit_depth, color_type, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr) + chunk(b"IDAT", zlib.compress(raw))
            + chunk(b"IEND", b""))


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    # 16-bit gray ramp: row 0 rises 0..65535, row 1 falls.
    w = 5
    ramp = [(x * 65535) // (w - 1) for x in range(w)]
    rows = [b"".join(struct.pack(">H", v) for v in ramp),
            b"".join(struct.pack(">H", 65535 - v) for v in ramp)]
    (OUT / "ramp16.png").write_bytes(png(w, 2, 16, 0, rows))

    # 8-bit mask: background, ignore, object, and two off-code values.
    (OUT / "mask8.png").write_bytes(png(5, 1, 8, 0, [bytes([0, 128, 255, 100, 200])]))

    # 2x2 RGB image.
    rgb = [bytes([255, 0, 0, 0, 255, 0]), bytes([0, 0, 255, 255, 255, 255])]
    (OUT / "rgb2x2.png").write_bytes(png(2, 2, 8, 2, rgb))

    # Flat 16x16 JPEG, color (200, 100, 50).
    from PIL import Image
    Image.new("RGB", (16, 16), (200, 100, 50)).save(OUT / "flat.jpg", quality=95)

    write_voc(Image)


VOC_XML = """<annotation>
  <folder>VOC2007</folder>
  <filename>000042.jpg</filename>
  <size><width>20</width><height>12</height><depth>3</depth></size>
  <segmented>1</segmented>
  <object>
    <name>dog</name><pose>Left</pose><truncated>0</truncated><difficult>0</difficult>
    <bndbox><xmin>3</xmin><ymin>2</ymin><xmax>8</xmax><ymax>10</ymax></bndbox>
  </object>
  <object>
    <name>cat</name><pose>Left</pose><truncated>1</truncated><difficult>1</difficult>
    <bndbox><xmin>12</xmin><ymin>4</ymin><xmax>19</xmax><ymax>9</ymax></bndbox>
  </object>
</annotation>
"""


def write_voc(Image):
    root = OUT / "voc"
    for sub in ("Annotations", "JPEGImages", "SegmentationObject"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    (root / "Annotations" / "000042.xml").write_text(VOC_XML)
    Image.new("RGB", (20, 12), (90, 90, 90)).save(root / "JPEGImages" / "000042.jpg", quality=95)

    # Instance k fills its (0-based) box; a void border of 255 rings object 1.
    seg = Image.new("P", (20, 12), 0)
    seg.putpalette([0, 0, 0, 128, 0, 0, 0, 128, 0] + [0, 0, 0] * 252 + [224, 224, 192])
    px = seg.load()
    for y in range(1, 10):
        for x in range(2, 8):
            px[x, y] = 1
    for x in range(1, 9):
        px[x, 0] = 255
    for y in range(3, 9):
        for x in range(11, 19):
            px[x, y] = 2
    seg.save(root / "SegmentationObject" / "000042.png")


if __name__ == "__main__":
    main()
