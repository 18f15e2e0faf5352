import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { main } from "../src/cli.js";
import { SchemaError } from "../src/errors.js";
import { render } from "../src/render.js";

const FIXTURES = path.join(__dirname, "fixtures");
let outDir: string;

beforeEach(() => {
  outDir = fs.mkdtempSync(path.join(os.tmpdir(), "figures-"));
});

afterEach(() => {
  fs.rmSync(outDir, { recursive: true, force: true });
});

function fixture(...parts: string[]): string {
  return path.join(FIXTURES, ...parts);
}

function renderKind(kind: string, input: string, extra = {}): string {
  const outputPath = path.join(outDir, `${kind}.svg`);
  render({
    kind: kind as never,
    inputPath: input,
    outputPath,
    ...extra,
  });
  return fs.readFileSync(outputPath, "utf-8");
}

describe("all five figure kinds render from the golden fixtures", () => {
  it("trace", () => {
    const svg = renderKind("trace", fixture("trace", "trace.csv"));
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("bound-line");
  });

  it("handicap curve", () => {
    const svg = renderKind(
      "handicap_curve",
      fixture("exp1", "nhandicap_curve_eps0.05_alpha0.1.csv"),
    );
    expect(svg).toContain("mean-curve");
    expect(svg).toContain("bound-line");
    expect(svg).toContain("stderr-band");
  });

  it("rho curve", () => {
    const svg = renderKind(
      "rho_curve",
      fixture("exp1", "rho_curve_eps0.05_alpha0.1.csv"),
    );
    expect(svg).toContain("mean-curve");
    expect(svg).toContain("bound-line");
  });

  it("histogram", () => {
    const svg = renderKind(
      "histogram",
      fixture("exp1", "testing_times_eps0.05_alpha0.1.csv"),
    );
    expect(svg).toContain("hist-bar");
    expect(svg).toContain("bound-line");
    expect(svg).toContain("mean-line");
  });

  it("sweep, both metrics", () => {
    const nh = renderKind("sweep", fixture("exp2", "sweep.csv"));
    expect(nh).toContain("mean-curve");
    const rho = renderKind("sweep", fixture("exp2", "sweep.csv"), {
      options: { metric: "rho_inf" },
    });
    expect(rho).toContain("terminal safety ratio");
  });
});

describe("trace crossing markers", () => {
  it("draws exactly one marker per discarded arm", () => {
    const svg = renderKind("trace", fixture("trace", "trace.csv"));
    const meta = JSON.parse(
      fs.readFileSync(fixture("trace", "trace_meta.json"), "utf-8"),
    );
    const discarded = (meta.discard_pull as number[]).filter((p) => p >= 0);
    const markers = svg.match(/class="crossing-marker"/g) ?? [];
    expect(discarded.length).toBe(3);
    expect(markers.length).toBe(discarded.length);
  });
});

describe("metadata caption", () => {
  it("embeds the run summary from the sidecar", () => {
    const svg = renderKind("trace", fixture("trace", "trace.csv"));
    expect(svg).toContain("mu=0.9");
    expect(svg).toContain("seed=7");
  });

  it("embeds the experiment summary", () => {
    const svg = renderKind(
      "handicap_curve",
      fixture("exp1", "nhandicap_curve_eps0.05_alpha0.1.csv"),
    );
    expect(svg).toContain("N=20");
    expect(svg).toContain("reps=3");
  });

  it("fails when no sidecar can be found", () => {
    const lonely = path.join(outDir, "sweep.csv");
    fs.copyFileSync(fixture("exp2", "sweep.csv"), lonely);
    expect(() =>
      render({
        kind: "sweep",
        inputPath: lonely,
        outputPath: path.join(outDir, "out.svg"),
      }),
    ).toThrow(SchemaError);
  });
});

describe("schema validation", () => {
  it("rejects a column mismatch and writes nothing", () => {
    const bad = path.join(outDir, "bad.csv");
    fs.writeFileSync(bad, "t,value\n1,2\n");
    const output = path.join(outDir, "bad.svg");
    expect(() =>
      render({
        kind: "handicap_curve",
        inputPath: bad,
        outputPath: output,
        metaPath: fixture("exp1", "metadata.json"),
      }),
    ).toThrow(SchemaError);
    expect(fs.existsSync(output)).toBe(false);
  });

  it("rejects empty input rows and writes nothing", () => {
    const empty = path.join(outDir, "empty.csv");
    fs.writeFileSync(empty, "t,mean,stderr,bound\n");
    const output = path.join(outDir, "empty.svg");
    expect(() =>
      render({
        kind: "handicap_curve",
        inputPath: empty,
        outputPath: output,
        metaPath: fixture("exp1", "metadata.json"),
      }),
    ).toThrow(SchemaError);
    expect(fs.existsSync(output)).toBe(false);
  });

  it("ignores unknown columns with a warning", () => {
    const source = fs.readFileSync(
      fixture("exp1", "nhandicap_curve_eps0.05_alpha0.1.csv"),
      "utf-8",
    );
    const lines = source.trimEnd().split("\n");
    const widened =
      lines[0] +
      ",debug\n" +
      lines
        .slice(1)
        .map((line) => line + ",0")
        .join("\n") +
      "\n";
    const input = path.join(outDir, "extra.csv");
    fs.writeFileSync(input, widened);
    const warn = vi.spyOn(console, "warn").mockImplementation(() => {});
    try {
      render({
        kind: "handicap_curve",
        inputPath: input,
        outputPath: path.join(outDir, "extra.svg"),
        metaPath: fixture("exp1", "metadata.json"),
      });
      expect(warn).toHaveBeenCalledOnce();
      expect(String(warn.mock.calls[0][0])).toContain("debug");
    } finally {
      warn.mockRestore();
    }
    expect(fs.existsSync(path.join(outDir, "extra.svg"))).toBe(true);
  });
});

describe("rendering is read-only and idempotent", () => {
  it("does not modify inputs and reproduces identical output", () => {
    const input = fixture("exp2", "sweep.csv");
    const before = fs.readFileSync(input);
    const first = renderKind("sweep", input);
    const second = renderKind("sweep", input);
    expect(first).toBe(second);
    expect(fs.readFileSync(input).equals(before)).toBe(true);
  });
});

describe("cli", () => {
  it("renders through the command line", () => {
    const output = path.join(outDir, "cli.svg");
    const code = main([
      "--kind",
      "trace",
      "--input",
      fixture("trace", "trace.csv"),
      "--output",
      output,
    ]);
    expect(code).toBe(0);
    expect(fs.existsSync(output)).toBe(true);
  });

  it("rejects an unknown kind", () => {
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    try {
      expect(main(["--kind", "pie", "--input", "x", "--output", "y"])).toBe(1);
    } finally {
      err.mockRestore();
    }
  });

  it("maps schema problems to exit 1", () => {
    const bad = path.join(outDir, "bad.csv");
    fs.writeFileSync(bad, "a,b\n1,2\n");
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    try {
      const code = main([
        "--kind",
        "sweep",
        "--input",
        bad,
        "--output",
        path.join(outDir, "x.svg"),
        "--meta",
        fixture("exp2", "metadata.json"),
      ]);
      expect(code).toBe(1);
    } finally {
      err.mockRestore();
    }
  });
});
