// @vitest-environment jsdom
//
// Scripted end-to-end session: spawns the real Python elicitation server,
// mounts the app into jsdom, and answers 10 pragmatic feature-preference
// queries in practice mode by driving the rendered form.

import { ChildProcess, spawn } from 'node:child_process';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api';
import { mountApp } from '../src/main';
import type { QueryPayload } from '../src/types';

const PORT = 8740 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

async function waitForServer(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/openapi.json`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await sleep(250);
  }
  throw new Error(`server did not come up on ${BASE}`);
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor(check: () => boolean, what: string,
                       timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) return;
    await sleep(50);
  }
  throw new Error(`timed out waiting for ${what}`);
}

beforeAll(async () => {
  server = spawn('python3', [
    '-c',
    `from featpref.service import serve; serve(port=${PORT})`,
  ], { stdio: ['ignore', 'pipe', 'pipe'] });
  server.on('error', (err) => {
    throw new Error(`could not start server: ${err}`);
  });
  await waitForServer();
});

afterAll(() => {
  server?.kill('SIGTERM');
});

/** Answer exactly as the hidden practice reward dictates. */
function oracleAnswers(query: QueryPayload, theta: number[]) {
  const a = query.option_values.a;
  const b = query.option_values.b;
  const dot = (x: number[]) => x.reduce((acc, v, j) => acc + v * theta[j], 0);
  const example = dot(a) >= dot(b) ? 'first' : 'second';
  const relevant = query.features.filter((_, j) => theta[j] !== 0);
  const featureChoices: Record<string, 'first' | 'second' | 'skip'> = {};
  relevant.forEach((name) => {
    const j = query.features.indexOf(name);
    const gap = theta[j] * (a[j] - b[j]);
    featureChoices[name] = gap > 0 ? 'first' : gap < 0 ? 'second' : 'skip';
  });
  return { example, featureChoices, description: relevant.join(', ') };
}

describe('live scripted session', () => {
  it('completes 10 prag-fp practice queries with improving accuracy', async () => {
    document.body.innerHTML = '';
    const root = document.createElement('div');
    document.body.appendChild(root);

    const app = mountApp(root, new ApiClient(BASE));
    await app.controller.start({
      domain: 'mushroom',
      condition: 'prag-fp',
      mode: 'practice',
      seed: 12,
      relevant_count: 1,
    });
    const theta = app.controller.state.session!.gt_theta!;
    const initialAccuracy = app.controller.state.snapshot!.gt_best_probability!;
    expect(initialAccuracy).toBeGreaterThan(0.3);
    expect(initialAccuracy).toBeLessThan(0.7);

    for (let step = 1; step <= 10; step += 1) {
      const query = app.controller.state.query!;
      const plan = oracleAnswers(query, theta);

      // drive the rendered form like a user would
      root.querySelector<HTMLInputElement>(
        `input[name="example"][value="${plan.example}"]`)!.click();
      for (const [name, choice] of Object.entries(plan.featureChoices)) {
        root.querySelector<HTMLInputElement>(
          `input[name="feat-${name}"][value="${choice}"]`)!.click();
      }
      const box = root.querySelector<HTMLTextAreaElement>('.description-box')!;
      box.value = plan.description;
      box.dispatchEvent(new Event('input'));

      const submit = root.querySelector<HTMLButtonElement>('button.submit')!;
      await waitFor(() => !submit.disabled, 'submit to enable');
      submit.click();
      await waitFor(
        () => app.controller.state.history.length === step
          && !app.controller.state.busy,
        `response ${step} to complete`,
      );

      // snapshot updated after every submit
      const snap = app.controller.state.snapshot!;
      expect(snap.n_responses).toBe(step);
      expect(app.controller.state.query!.query_id).not.toBe(query.query_id);
    }

    // the accuracy sparkline is rendered and ends above its starting point
    const series = app.controller.accuracySeries();
    expect(series).toHaveLength(11);
    expect(series[10]!).toBeGreaterThan(series[0]!);

    const sparkline = root.querySelector('.accuracy-sparkline svg.sparkline');
    expect(sparkline).not.toBeNull();
    expect(sparkline!.querySelector('polyline')).not.toBeNull();
    expect(root.textContent).toContain(
      `accuracy (probability of the true best option): ` +
      `${series[10]!.toFixed(3)}`);
  }, 180_000);

  it('keeps sessions isolated and replays cleanly via export', async () => {
    const client = new ApiClient(BASE);
    const a = await client.createSession({
      domain: 'mushroom', condition: 'rlhf', mode: 'free', seed: 1,
    });
    const b = await client.createSession({
      domain: 'mushroom', condition: 'rlhf', mode: 'free', seed: 1,
    });
    const queryA = await client.getQuery(a.id);
    await client.submitResponse(a.id, {
      query_id: queryA.query_id, example_choice: 'first',
    });
    const snapA = await client.getModel(a.id);
    const snapB = await client.getModel(b.id);
    expect(snapA.n_responses).toBe(1);
    expect(snapB.n_responses).toBe(0);
  });
});
