#!/usr/bin/env python3
"""Minimal external evaluator: reads one JSON request per line, answers one JSON reply per line.

Request: {"id": <int>, "design": [width_um, length_um, fingers]}
Reply:   {"id": <int>, "specs": [area_um2, drive_ratio, fingers_per_um]}
"""
import json
import sys


def simulate(width, length, fingers):
    area = width * length
    drive = width / length
    return [area, drive, fingers / width]


def main():
    for line in sys.stdin:
        request = json.loads(line)
        try:
            reply = {"id": request["id"], "specs": simulate(*request["design"])}
        except Exception as exc:  # report, never die, so the harness keeps its child
            reply = {"id": request["id"], "error": str(exc)}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
