/** Boots the real labeling service for the end-to-end test run. */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { E2E_BASE, E2E_CAMPAIGN, E2E_MANIFEST, E2E_PORT } from "./e2e_constants.js";

let server: ChildProcess | null = null;

async function waitUntilReady(url: string, timeoutMs = 20000): Promise<void> {
  const started = Date.now();
  for (;;) {
    try {
      const response = await fetch(url);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() - started > timeoutMs) {
      throw new Error(`labeling service did not come up at ${url}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
}

export default async function setup(): Promise<() => Promise<void>> {
  const dir = mkdtempSync(join(tmpdir(), "pairrank-e2e-"));
  const manifestPath = join(dir, "manifest.json");
  writeFileSync(manifestPath, JSON.stringify(E2E_MANIFEST));
  server = spawn(
    "python3",
    ["-m", "pairrank.cli", "serve",
     "--manifest", manifestPath,
     "--port", String(E2E_PORT)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const stderr: string[] = [];
  server.stderr?.on("data", (chunk) => stderr.push(String(chunk)));
  try {
    await waitUntilReady(`${E2E_BASE}/campaigns/${E2E_CAMPAIGN}/status`);
  } catch (err) {
    server.kill("SIGTERM");
    throw new Error(`${err}\nserver stderr:\n${stderr.join("")}`);
  }
  return async () => {
    server?.kill("SIGTERM");
  };
}
