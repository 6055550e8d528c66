// DOM and SVG builders. Every number shown here comes from a server snapshot
// or query payload; nothing is computed from model parameters client-side.

import type { FormAnswers } from './controller';
import type { FeatureChoice, ModelSnapshot, QueryPayload } from './types';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function optionTable(query: QueryPayload): HTMLTableElement {
  const table = el('table', 'option-table');
  const head = table.createTHead().insertRow();
  for (const label of ['feature', 'option A', 'option B']) {
    head.appendChild(el('th', undefined, label));
  }
  const body = table.createTBody();
  for (const name of query.features) {
    const row = body.insertRow();
    row.insertCell().textContent = name;
    row.insertCell().textContent = query.options.a[name];
    row.insertCell().textContent = query.options.b[name];
  }
  return table;
}

function choiceRadio(
  name: string,
  value: string,
  label: string,
  checked: boolean,
  onPick: () => void,
): HTMLLabelElement {
  const wrap = el('label', 'choice');
  const input = el('input');
  input.type = 'radio';
  input.name = name;
  input.value = value;
  input.checked = checked;
  input.addEventListener('change', onPick);
  wrap.appendChild(input);
  wrap.appendChild(document.createTextNode(label));
  return wrap;
}

export interface QueryFormHandles {
  root: HTMLElement;
  submitButton: HTMLButtonElement;
  refresh: () => void;
}

export function renderQueryForm(
  query: QueryPayload,
  form: FormAnswers,
  onSubmit: () => void,
  canSubmit: () => boolean,
): QueryFormHandles {
  const root = el('div', 'query-form');
  root.appendChild(el('h2', undefined, `Query ${query.query_id}`));
  root.appendChild(optionTable(query));

  const submitButton = el('button', 'submit', 'Submit answer');
  submitButton.disabled = true;
  const refresh = () => {
    submitButton.disabled = !canSubmit();
  };

  const exampleRow = el('div', 'example-row', 'Which option do you prefer? ');
  for (const value of ['first', 'second'] as const) {
    exampleRow.appendChild(
      choiceRadio('example', value, value === 'first' ? 'A' : 'B',
                  form.example === value, () => {
                    form.example = value;
                    refresh();
                  }),
    );
  }
  root.appendChild(exampleRow);

  if (query.answer_kinds.features !== 'none') {
    const required = query.answer_kinds.features === 'all';
    const section = el('div', 'feature-choices');
    section.appendChild(
      el('h3', undefined,
         required ? 'Which value do you prefer, per feature?'
                  : 'Feature preferences (for the features you describe)'),
    );
    for (const name of query.features) {
      const row = el('div', 'feature-row', `${name}: `);
      for (const value of ['first', 'second', 'skip'] as FeatureChoice[]) {
        const label = value === 'first' ? 'A' : value === 'second' ? 'B' : 'no preference';
        row.appendChild(
          choiceRadio(`feat-${name}`, value, label,
                      form.features[name] === value, () => {
                        form.features[name] = value;
                        refresh();
                      }),
        );
      }
      section.appendChild(row);
    }
    root.appendChild(section);
  }

  if (query.answer_kinds.description) {
    const wrap = el('div', 'description-wrap');
    wrap.appendChild(
      el('h3', undefined, 'Which features mattered for your choice?'),
    );
    const box = el('textarea', 'description-box');
    box.rows = 2;
    box.placeholder = 'e.g. "only the color and the smell matter"';
    box.value = form.description;
    box.addEventListener('input', () => {
      form.description = box.value;
      refresh();
    });
    wrap.appendChild(box);
    root.appendChild(wrap);
  }

  submitButton.addEventListener('click', () => {
    if (canSubmit()) onSubmit();
  });
  root.appendChild(submitButton);
  refresh();
  return { root, submitButton, refresh };
}

const SVG_NS = 'http://www.w3.org/2000/svg';

/** Horizontal bar chart of the combiner weights (string of SVG markup). */
export function barChartSvg(labels: string[], values: number[]): string {
  const width = 320;
  const rowHeight = 18;
  const mid = width / 2;
  const maxAbs = Math.max(0.001, ...values.map((v) => Math.abs(v)));
  const rows = labels.map((label, i) => {
    const v = values[i];
    const len = (Math.abs(v) / maxAbs) * (width / 2 - 70);
    const x = v >= 0 ? mid : mid - len;
    const y = i * rowHeight + 4;
    const color = v >= 0 ? '#2c7a3f' : '#a23b3b';
    return (
      `<text x="2" y="${y + 10}" font-size="10">${label}</text>` +
      `<rect x="${x.toFixed(1)}" y="${y}" width="${Math.max(len, 0.5).toFixed(1)}"` +
      ` height="12" fill="${color}"></rect>` +
      `<text x="${width - 48}" y="${y + 10}" font-size="10">${v.toFixed(3)}</text>`
    );
  });
  const height = labels.length * rowHeight + 8;
  return (
    `<svg xmlns="${SVG_NS}" viewBox="0 0 ${width} ${height}" class="bar-chart">` +
    `<line x1="${mid}" y1="0" x2="${mid}" y2="${height}" stroke="#999"></line>` +
    rows.join('') +
    '</svg>'
  );
}

/** Accuracy-over-responses sparkline; null entries (free mode) are skipped. */
export function sparklineSvg(series: Array<number | null>): string {
  const width = 240;
  const height = 48;
  const points = series
    .map((v, i) => ({ v, i }))
    .filter((p): p is { v: number; i: number } => p.v !== null);
  const step = series.length > 1 ? width / (series.length - 1) : 0;
  const y = (v: number) => (1 - v) * (height - 8) + 4;
  const coords = points.map((p) => `${(p.i * step).toFixed(1)},${y(p.v).toFixed(1)}`);
  const last = points[points.length - 1];
  const lastDot = last === undefined
    ? ''
    : `<circle cx="${(last.i * step).toFixed(1)}" cy="${y(last.v).toFixed(1)}"` +
      ' r="2.5" fill="#2c4a7a"></circle>';
  return (
    `<svg xmlns="${SVG_NS}" viewBox="0 0 ${width} ${height}" class="sparkline">` +
    `<line x1="0" y1="${y(0.5)}" x2="${width}" y2="${y(0.5)}"` +
    ' stroke="#ccc" stroke-dasharray="3,3"></line>' +
    (coords.length > 1
      ? `<polyline fill="none" stroke="#2c4a7a" stroke-width="1.5"` +
        ` points="${coords.join(' ')}"></polyline>`
      : '') +
    lastDot +
    '</svg>'
  );
}

export function featureRewardTable(snapshot: ModelSnapshot): HTMLTableElement {
  const table = el('table', 'feature-rewards');
  const head = table.createTHead().insertRow();
  head.appendChild(el('th', undefined, 'feature'));
  head.appendChild(el('th', undefined, 'per-value reward'));
  const body = table.createTBody();
  for (const row of snapshot.feature_rewards) {
    const tr = body.insertRow();
    tr.insertCell().textContent = row.feature;
    const cell = tr.insertCell();
    if (row.values !== undefined) {
      cell.textContent = Object.entries(row.values)
        .map(([name, value]) => `${name}: ${value.toFixed(3)}`)
        .join(', ');
    } else {
      cell.textContent = `weight ${(row.weight ?? 0).toFixed(3)}`;
    }
  }
  return table;
}

export function renderSnapshotPanel(
  snapshot: ModelSnapshot,
  features: string[],
  accuracySeries: Array<number | null>,
): HTMLElement {
  const root = el('div', 'snapshot-panel');
  root.appendChild(el('h2', undefined, 'Learned model'));
  root.appendChild(
    el('p', 'record-counts',
       `${snapshot.n_records} answers, ${snapshot.n_synthesized} synthesized`),
  );
  const chart = el('div', 'combiner-chart');
  chart.innerHTML = barChartSvg(features, snapshot.combiner);
  root.appendChild(chart);
  root.appendChild(featureRewardTable(snapshot));
  if (snapshot.gt_best_probability !== null) {
    const acc = el('div', 'accuracy');
    acc.appendChild(
      el('p', 'accuracy-label',
         `accuracy (probability of the true best option): ` +
         `${snapshot.gt_best_probability.toFixed(3)}`),
    );
    const spark = el('div', 'accuracy-sparkline');
    spark.innerHTML = sparklineSvg(accuracySeries);
    acc.appendChild(spark);
    root.appendChild(acc);
  }
  return root;
}

export function renderErrorBanner(message: string, onRetry: () => void): HTMLElement {
  const banner = el('div', 'error-banner');
  banner.appendChild(el('span', undefined, message));
  const retry = el('button', 'retry', 'Retry');
  retry.addEventListener('click', onRetry);
  banner.appendChild(retry);
  return banner;
}
