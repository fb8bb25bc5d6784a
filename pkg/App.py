import os

from flask import Flask, jsonify
from flask_cors import CORS

from config.logging_setup import setup_logging
from service.endpoints import register_detection_routes


setup_logging()

app = Flask(__name__)
CORS(app)
register_detection_routes(app)


# ========================================
# PÁGINA INICIAL
# ========================================
@app.route("/")
def index():
    """Estado do serviço e lista de endpoints"""
    return jsonify({
        'message': 'Detetor RGB+IR com fusão Mamba - serviço de inferência',
        'status': 'online',
        'version': '1.0.0',
        'endpoints': {
            'variants': '/api/variants',
            'params': '/api/params',
            'detect': '/api/detect (POST)'
        }
    })


# ========================================
# INICIALIZAÇÃO
# ========================================
if __name__ == "__main__":
    port = int(os.environ.get("PORT", 5000))
    app.run(host="0.0.0.0", port=port)
