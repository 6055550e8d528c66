// Page wiring: a start panel (server URL + session options), the query form,
// and the live model panel.

import { ApiClient } from './api';
import { emptyForm, FormAnswers, SessionController } from './controller';
import {
  renderErrorBanner,
  renderQueryForm,
  renderSnapshotPanel,
} from './render';

export interface AppHandles {
  controller: SessionController;
  form: FormAnswers;
  root: HTMLElement;
}

export function mountApp(root: HTMLElement, client: ApiClient): AppHandles {
  const controller = new SessionController(client);
  let form = emptyForm();

  const queryPane = document.createElement('div');
  queryPane.className = 'query-pane';
  const modelPane = document.createElement('div');
  modelPane.className = 'model-pane';
  const errorPane = document.createElement('div');
  errorPane.className = 'error-pane';
  root.append(errorPane, queryPane, modelPane);

  const rerender = () => {
    const state = controller.state;
    errorPane.replaceChildren();
    if (state.error !== null) {
      errorPane.appendChild(
        renderErrorBanner(state.error, () => controller.submit(form)),
      );
    }
    queryPane.replaceChildren();
    if (state.query !== null) {
      const handles = renderQueryForm(
        state.query,
        form,
        () => void controller.submit(form),
        () => controller.canSubmit(form),
      );
      queryPane.appendChild(handles.root);
    } else if (state.busy) {
      queryPane.textContent = 'working...';
    }
    modelPane.replaceChildren();
    if (state.snapshot !== null && state.session !== null) {
      modelPane.appendChild(
        renderSnapshotPanel(
          state.snapshot,
          state.query?.features ??
            state.snapshot.feature_rewards.map((r) => r.feature),
          controller.accuracySeries(),
        ),
      );
    }
  };

  let lastQueryId: string | null = null;
  controller.onChange((state) => {
    // a fresh query means fresh form state
    const qid = state.query?.query_id ?? null;
    if (qid !== lastQueryId) {
      form = emptyForm();
      lastQueryId = qid;
    }
    rerender();
  });

  rerender();
  return { controller, get form() { return form; }, root };
}

function startPanel(root: HTMLElement): void {
  const params = new URLSearchParams(window.location.search);
  const panel = document.createElement('div');
  panel.className = 'start-panel';
  panel.innerHTML = `
    <h1>Preference teaching</h1>
    <label>server <input id="server" value="${params.get('server') ?? 'http://127.0.0.1:8080'}"></label>
    <label>domain
      <select id="domain"><option>mushroom</option><option>flight</option></select>
    </label>
    <label>condition
      <select id="condition">
        <option>prag-fp</option><option>prag-rlhf</option>
        <option>fp</option><option>rlhf</option>
      </select>
    </label>
    <label>mode
      <select id="mode"><option>practice</option><option>free</option></select>
    </label>
    <label>seed <input id="seed" type="number" value="0"></label>
    <button id="start">Start session</button>
    <p id="start-error" class="error"></p>
  `;
  root.appendChild(panel);
  const field = <T extends HTMLElement>(id: string) =>
    panel.querySelector(`#${id}`) as T;

  field<HTMLButtonElement>('start').addEventListener('click', async () => {
    const client = new ApiClient(field<HTMLInputElement>('server').value);
    const app = mountApp(root, client);
    try {
      await app.controller.start({
        domain: field<HTMLSelectElement>('domain').value,
        condition: field<HTMLSelectElement>('condition').value,
        mode: field<HTMLSelectElement>('mode').value,
        seed: Number(field<HTMLInputElement>('seed').value),
      });
      panel.remove();
    } catch (err) {
      field<HTMLParagraphElement>('start-error').textContent =
        err instanceof Error ? err.message : String(err);
    }
  });
}

if (typeof document !== 'undefined' && document.getElementById('app') !== null) {
  startPanel(document.getElementById('app') as HTMLElement);
}
